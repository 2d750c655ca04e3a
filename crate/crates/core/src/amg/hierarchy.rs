//! Hierarchy setup, V-cycle recursion, and the stand-alone solve loop.

use std::time::Instant;

use crate::amg::coarsen::{cljp_coarsen, rs_coarsen};
use crate::amg::dense::DenseLu;
use crate::amg::interp::{interp_direct, interp_standard};
use crate::amg::smoother::{Smoother, SmootherConfig};
use crate::amg::strength::{strength_with, StrengthRule};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::krylov::{Breakdown, SolveReport, SolverConfig};
use crate::op::Preconditioner;
use crate::sparse::csr::SparseCsr;
use crate::sparse::kernels::{axpby_inplace, find_non_finite, norm2};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Coarsening {
    Rs,
    Cljp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Direct,
    Standard,
}

/// Setup-phase options. Defaults: theta 0.25, RS coarsening, direct
/// interpolation, damped Jacobi with 3 pre- and 3 post-sweeps, at most 8
/// levels, direct solve at 64 rows.
#[derive(Clone, Debug)]
pub struct AmgOptions {
    pub theta: f64,
    pub strength_rule: StrengthRule,
    pub coarsening: Coarsening,
    pub interpolation: Interpolation,
    pub smoother: SmootherConfig,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub max_levels: usize,
    pub coarse_threshold: usize,
    pub seed: u64,
}

impl Default for AmgOptions {
    fn default() -> Self {
        AmgOptions {
            theta: 0.25,
            strength_rule: StrengthRule::Magnitude,
            coarsening: Coarsening::Rs,
            interpolation: Interpolation::Direct,
            smoother: SmootherConfig::damped_jacobi(),
            pre_sweeps: 3,
            post_sweeps: 3,
            max_levels: 8,
            coarse_threshold: 64,
            seed: 0,
        }
    }
}

struct Level {
    a: SparseCsr,
    p: SparseCsr,
    r: SparseCsr,
    pre: Smoother,
    post: Smoother,
}

/// Multigrid hierarchy: level 0 is finest; the coarsest level holds a
/// dense factorization.
pub struct AmgHierarchy {
    levels: Vec<Level>,
    coarse_a: SparseCsr,
    coarse_lu: DenseLu,
    stagnated: bool,
}

/// Builds the hierarchy: strength graph, coarse/fine split, interpolation,
/// and the Galerkin triple product per level, until the coarse size drops
/// to the direct-solve threshold or the level cap is reached. A split that
/// fails to shrink the grid stops coarsening there (flagged, not fatal).
pub fn amg_setup(a: &SparseCsr, opts: &AmgOptions) -> Result<AmgHierarchy> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if opts.max_levels == 0 {
        return Err(Error::Format("max_levels must be at least 1".into()));
    }
    let mut levels = Vec::new();
    let mut a_l = a.clone();
    let mut stagnated = false;
    while a_l.n_rows() > opts.coarse_threshold && levels.len() + 1 < opts.max_levels {
        let level_seed = opts.seed.wrapping_add(levels.len() as u64);
        let s = strength_with(&a_l, opts.theta, opts.strength_rule)?;
        let cf = match opts.coarsening {
            Coarsening::Rs => rs_coarsen(&s),
            Coarsening::Cljp => cljp_coarsen(&s, level_seed),
        };
        if cf.n_coarse() >= a_l.n_rows() {
            stagnated = true;
            break;
        }
        let p = match opts.interpolation {
            Interpolation::Direct => interp_direct(&a_l, &cf, &s)?,
            Interpolation::Standard => interp_standard(&a_l, &cf, &s)?,
        };
        let r = p.transpose();
        let ap = a_l.matmul(&p)?;
        let a_next = r.matmul(&ap)?;
        let pre = Smoother::build(
            &a_l,
            opts.smoother.clone().with_sweeps(opts.pre_sweeps),
            level_seed,
        )?;
        let post = Smoother::build(
            &a_l,
            opts.smoother.clone().with_sweeps(opts.post_sweeps),
            level_seed,
        )?;
        levels.push(Level {
            a: a_l,
            p,
            r,
            pre,
            post,
        });
        a_l = a_next;
    }
    let coarse_lu = DenseLu::factor(&a_l)?;
    Ok(AmgHierarchy {
        levels,
        coarse_a: a_l,
        coarse_lu,
        stagnated,
    })
}

impl AmgHierarchy {
    /// Total level count (coarsest included).
    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn stagnated(&self) -> bool {
        self.stagnated
    }

    pub fn n_rows(&self) -> usize {
        self.level_matrix(0).n_rows()
    }

    pub fn level_matrix(&self, l: usize) -> &SparseCsr {
        if l == self.levels.len() {
            &self.coarse_a
        } else {
            &self.levels[l].a
        }
    }

    /// Prolongation from level `l + 1` to level `l`.
    pub fn prolongation(&self, l: usize) -> &SparseCsr {
        &self.levels[l].p
    }

    /// Restriction from level `l` to level `l + 1` (transpose of the
    /// prolongation).
    pub fn restriction(&self, l: usize) -> &SparseCsr {
        &self.levels[l].r
    }

    /// `sum_l n_l / n_0`.
    pub fn grid_complexity(&self) -> f64 {
        let n0 = self.n_rows().max(1) as f64;
        (0..self.n_levels())
            .map(|l| self.level_matrix(l).n_rows() as f64)
            .sum::<f64>()
            / n0
    }

    /// `sum_l nnz_l / nnz_0`.
    pub fn operator_complexity(&self) -> f64 {
        let nnz0 = self.level_matrix(0).nnz().max(1) as f64;
        (0..self.n_levels())
            .map(|l| self.level_matrix(l).nnz() as f64)
            .sum::<f64>()
            / nnz0
    }

    /// Per-level sizes and complexities as structured text.
    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "levels {}", self.n_levels());
        for l in 0..self.n_levels() {
            let m = self.level_matrix(l);
            let _ = writeln!(out, "level {} n {} nnz {}", l, m.n_rows(), m.nnz());
        }
        let _ = writeln!(out, "grid_complexity {:.6}", self.grid_complexity());
        let _ = writeln!(out, "operator_complexity {:.6}", self.operator_complexity());
        if self.stagnated {
            let _ = writeln!(out, "stagnated true");
        }
        out
    }

    /// One V-cycle starting at `level`: pre-smooth, restrict the residual,
    /// recurse with a zero initial guess, prolongate the correction,
    /// post-smooth; the coarsest level solves directly.
    pub fn vcycle(&self, level: usize, x: &mut [f64], b: &[f64], exec: Exec) {
        if level == self.levels.len() {
            self.coarse_lu.solve_into(b, x);
            return;
        }
        let lv = &self.levels[level];
        lv.pre.apply(&lv.a, x, b, exec);

        let mut residual = vec![0.0; b.len()];
        lv.a.spmv_into(x, &mut residual, exec);
        axpby_inplace(1.0, b, -1.0, &mut residual, exec);

        let mut b_next = vec![0.0; lv.r.n_rows()];
        lv.r.spmv_into(&residual, &mut b_next, exec);
        let mut x_next = vec![0.0; b_next.len()];
        self.vcycle(level + 1, &mut x_next, &b_next, exec);

        lv.p.spmv_axpby(1.0, &x_next, 1.0, x, exec);
        lv.post.apply(&lv.a, x, b, exec);
    }

    /// Repeats V-cycles until the relative residual meets the tolerance.
    /// Residual growth over three consecutive cycles is reported as
    /// divergence.
    pub fn solve(
        &self,
        b: &[f64],
        cfg: &SolverConfig,
        exec: Exec,
    ) -> Result<(Vec<f64>, SolveReport)> {
        let started = Instant::now();
        let n = self.n_rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "amg solve",
                expected: n,
                actual: b.len(),
            });
        }
        if let Some(i) = find_non_finite(b) {
            return Err(Error::NonFinite { index: i });
        }
        let mut report = SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: false,
            breakdown: None,
            setup_seconds: 0.0,
            solve_seconds: 0.0,
            spmv_seconds: 0.0,
            precond_seconds: 0.0,
            comm_volume: 0,
        };
        let mut x = match &cfg.initial_guess {
            Some(g) => {
                if g.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "initial guess",
                        expected: n,
                        actual: g.len(),
                    });
                }
                g.clone()
            }
            None => vec![0.0; n],
        };
        let norm_b = norm2(b, exec);
        if norm_b == 0.0 {
            x.fill(0.0);
            report.converged = true;
            report.solve_seconds = started.elapsed().as_secs_f64();
            return Ok((x, report));
        }

        let a0 = self.level_matrix(0);
        let mut residual = vec![0.0; n];
        let mut rel_prev = {
            a0.spmv_into(&x, &mut residual, exec);
            axpby_inplace(1.0, b, -1.0, &mut residual, exec);
            norm2(&residual, exec) / norm_b
        };
        report.final_relative_residual = rel_prev;
        if rel_prev <= cfg.tolerance {
            report.converged = true;
            report.solve_seconds = started.elapsed().as_secs_f64();
            return Ok((x, report));
        }

        let mut growth_streak = 0;
        for cycle in 1..=cfg.max_iterations {
            self.vcycle(0, &mut x, b, exec);
            report.iterations = cycle;

            a0.spmv_into(&x, &mut residual, exec);
            axpby_inplace(1.0, b, -1.0, &mut residual, exec);
            let rel = norm2(&residual, exec) / norm_b;
            report.final_relative_residual = rel;
            if rel <= cfg.tolerance {
                report.converged = true;
                break;
            }
            if rel > rel_prev {
                growth_streak += 1;
                if growth_streak >= 3 {
                    report.breakdown = Some(Breakdown::Divergence);
                    break;
                }
            } else {
                growth_streak = 0;
            }
            rel_prev = rel;
        }
        report.solve_seconds = started.elapsed().as_secs_f64();
        Ok((x, report))
    }
}

/// One V-cycle from a zero initial guess: a fixed linear operator, usable
/// as a preconditioner.
pub struct AmgPrecond {
    hierarchy: AmgHierarchy,
}

impl AmgPrecond {
    pub fn new(hierarchy: AmgHierarchy) -> Self {
        AmgPrecond { hierarchy }
    }

    pub fn hierarchy(&self) -> &AmgHierarchy {
        &self.hierarchy
    }
}

impl Preconditioner for AmgPrecond {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        z.fill(0.0);
        self.hierarchy.vcycle(0, z, r, exec);
    }
}
