//! Point smoothers: damped/weighted Jacobi, Chebyshev, and Gauss-Seidel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::ilu::LevelSchedule;
use crate::sparse::csr::SparseCsr;
use crate::sparse::kernels::{axpby_inplace, norm2};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SmootherKind {
    DampedJacobi,
    WeightedJacobi,
    Chebyshev,
    GaussSeidel,
}

/// Smoother selection and parameters.
#[derive(Clone, Debug)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    /// Repetitions per application.
    pub sweeps: usize,
    /// Relaxation weight for the Jacobi family.
    pub damping: f64,
    /// Polynomial degree for Chebyshev.
    pub chebyshev_degree: usize,
    /// Explicit spectral bracket for Chebyshev (on the diagonally scaled
    /// operator); estimated by power iteration when absent.
    pub eigenvalue_bounds: Option<(f64, f64)>,
}

impl SmootherConfig {
    pub fn damped_jacobi() -> Self {
        SmootherConfig {
            kind: SmootherKind::DampedJacobi,
            sweeps: 1,
            damping: 2.0 / 3.0,
            chebyshev_degree: 3,
            eigenvalue_bounds: None,
        }
    }

    pub fn weighted_jacobi() -> Self {
        SmootherConfig {
            kind: SmootherKind::WeightedJacobi,
            damping: 0.8,
            ..SmootherConfig::damped_jacobi()
        }
    }

    pub fn chebyshev() -> Self {
        SmootherConfig {
            kind: SmootherKind::Chebyshev,
            ..SmootherConfig::damped_jacobi()
        }
    }

    pub fn gauss_seidel() -> Self {
        SmootherConfig {
            kind: SmootherKind::GaussSeidel,
            ..SmootherConfig::damped_jacobi()
        }
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }
}

/// Gauss-Seidel splitting: `(D + L) x_new = b - U x_old`, solved through
/// the level-schedule machinery.
#[derive(Clone, Debug)]
struct GsParts {
    lower: SparseCsr,
    schedule: LevelSchedule,
    strict_upper: SparseCsr,
}

/// A smoother bound to one matrix (setup-phase product).
#[derive(Clone, Debug)]
pub struct Smoother {
    config: SmootherConfig,
    inv_diag: Vec<f64>,
    cheb_bounds: Option<(f64, f64)>,
    gs: Option<GsParts>,
}

impl Smoother {
    pub fn build(a: &SparseCsr, config: SmootherConfig, seed: u64) -> Result<Smoother> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                n_rows: a.n_rows(),
                n_cols: a.n_cols(),
            });
        }
        if config.sweeps == 0 {
            return Err(Error::Format("smoother sweeps must be at least 1".into()));
        }
        let n = a.n_rows();
        let mut inv_diag = vec![0.0; n];
        for i in 0..n {
            let d = a.get(i, i).ok_or(Error::MissingDiagonal { row: i })?;
            if d == 0.0 {
                return Err(Error::ZeroPivot { row: i });
            }
            inv_diag[i] = 1.0 / d;
        }

        let cheb_bounds = if config.kind == SmootherKind::Chebyshev {
            Some(match config.eigenvalue_bounds {
                Some(b) => b,
                None => {
                    let lam = estimate_lambda_max(a, &inv_diag, seed);
                    (lam / 30.0, 1.1 * lam)
                }
            })
        } else {
            None
        };

        let gs = if config.kind == SmootherKind::GaussSeidel {
            Some(build_gs_parts(a))
        } else {
            None
        };

        Ok(Smoother {
            config,
            inv_diag,
            cheb_bounds,
            gs,
        })
    }

    pub fn config(&self) -> &SmootherConfig {
        &self.config
    }

    /// Runs the configured number of sweeps of `x <- smooth(x)` for the
    /// system `A x = b`.
    pub fn apply(&self, a: &SparseCsr, x: &mut [f64], b: &[f64], exec: Exec) {
        for _ in 0..self.config.sweeps {
            match self.config.kind {
                SmootherKind::DampedJacobi | SmootherKind::WeightedJacobi => {
                    self.jacobi_sweep(a, x, b, exec);
                }
                SmootherKind::Chebyshev => self.chebyshev_pass(a, x, b, exec),
                SmootherKind::GaussSeidel => self.gs_sweep(x, b, exec),
            }
        }
    }

    /// `x += damping * D^{-1} (b - A x)`.
    fn jacobi_sweep(&self, a: &SparseCsr, x: &mut [f64], b: &[f64], exec: Exec) {
        let mut r = vec![0.0; x.len()];
        a.spmv_into(x, &mut r, exec);
        axpby_inplace(1.0, b, -1.0, &mut r, exec);
        let damping = self.config.damping;
        let inv_diag = &self.inv_diag;
        exec::for_each_chunk_mut(exec, x, |range, out| {
            for (k, i) in range.enumerate() {
                out[k] += damping * inv_diag[i] * r[i];
            }
        });
    }

    /// Chebyshev polynomial in the diagonally scaled operator, applied to
    /// the residual via the standard three-term recurrence.
    fn chebyshev_pass(&self, a: &SparseCsr, x: &mut [f64], b: &[f64], exec: Exec) {
        let (lower, upper) = self.cheb_bounds.expect("bounds resolved at build");
        let n = x.len();
        let theta = 0.5 * (upper + lower);
        let delta = 0.5 * (upper - lower);
        if delta <= 0.0 {
            // degenerate bracket: one exact Jacobi-like step
            self.jacobi_sweep(a, x, b, exec);
            return;
        }
        let sigma = theta / delta;
        let mut rho = 1.0 / sigma;

        let inv_diag = &self.inv_diag;
        let scaled_residual = |x: &[f64], out: &mut Vec<f64>, exec: Exec| {
            a.spmv_into(x, out, exec);
            axpby_inplace(1.0, b, -1.0, out, exec);
            exec::for_each_chunk_mut(exec, out, |range, chunk| {
                for (k, i) in range.enumerate() {
                    chunk[k] *= inv_diag[i];
                }
            });
        };

        let mut r = vec![0.0; n];
        scaled_residual(x, &mut r, exec);
        let mut d: Vec<f64> = r.iter().map(|v| v / theta).collect();
        for step in 0..self.config.chebyshev_degree {
            axpby_inplace(1.0, &d, 1.0, x, exec);
            if step + 1 == self.config.chebyshev_degree {
                break;
            }
            scaled_residual(x, &mut r, exec);
            let rho_next = 1.0 / (2.0 * sigma - rho);
            // d = rho_next*rho * d + (2*rho_next/delta) * r
            axpby_inplace(2.0 * rho_next / delta, &r, rho_next * rho, &mut d, exec);
            rho = rho_next;
        }
    }

    /// Forward Gauss-Seidel: `(D + L) x = b - U x_old`, the lower solve
    /// running level by level.
    fn gs_sweep(&self, x: &mut [f64], b: &[f64], exec: Exec) {
        let gs = self.gs.as_ref().expect("built for Gauss-Seidel");
        let mut rhs = vec![0.0; x.len()];
        gs.strict_upper.spmv_into(x, &mut rhs, exec);
        axpby_inplace(1.0, b, -1.0, &mut rhs, exec);

        let row_ptr = gs.lower.row_ptr();
        let col_idx = gs.lower.col_idx();
        let values = gs.lower.values();
        for t in 0..gs.schedule.n_levels() {
            let rows = gs.schedule.level_rows(t);
            let compute = |i: usize, xs: &[f64]| -> f64 {
                let (start, end) = (row_ptr[i], row_ptr[i + 1]);
                let mut acc = rhs[i];
                // the diagonal is the last entry of a lower-triangular row
                for k in start..end - 1 {
                    acc -= values[k] * xs[col_idx[k]];
                }
                acc / values[end - 1]
            };
            exec::scatter_rows(rows, compute, x, exec);
        }
    }
}

fn build_gs_parts(a: &SparseCsr) -> GsParts {
    let n = a.n_rows();
    let mut lo_ptr = vec![0usize; n + 1];
    let mut lo_col = Vec::new();
    let mut lo_val = Vec::new();
    let mut up_ptr = vec![0usize; n + 1];
    let mut up_col = Vec::new();
    let mut up_val = Vec::new();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                lo_col.push(j);
                lo_val.push(v);
            } else {
                up_col.push(j);
                up_val.push(v);
            }
        }
        lo_ptr[i + 1] = lo_col.len();
        up_ptr[i + 1] = up_col.len();
    }
    let lower = SparseCsr::from_raw_unchecked(n, n, lo_ptr, lo_col, lo_val);
    let strict_upper = SparseCsr::from_raw_unchecked(n, n, up_ptr, up_col, up_val);
    let schedule = LevelSchedule::from_deps(n, false, |i| {
        let (cols, _) = lower.row(i);
        let end = cols.partition_point(|&j| j < i);
        cols[..end].iter()
    });
    GsParts {
        lower,
        schedule,
        strict_upper,
    }
}

/// Largest eigenvalue of `D^{-1} A` by a fixed number of power iterations
/// from a seeded random start.
fn estimate_lambda_max(a: &SparseCsr, inv_diag: &[f64], seed: u64) -> f64 {
    let n = a.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
    let mut w = vec![0.0; n];
    let mut lambda: f64 = 1.0;
    let exec = Exec::serial();
    let nv = norm2(&v, exec);
    if nv == 0.0 {
        return 1.0;
    }
    for val in v.iter_mut() {
        *val /= nv;
    }
    for _ in 0..10 {
        a.spmv_into(&v, &mut w, exec);
        for (wi, di) in w.iter_mut().zip(inv_diag) {
            *wi *= di;
        }
        lambda = norm2(&w, exec);
        if lambda == 0.0 {
            return 1.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / lambda;
        }
    }
    lambda
}

/// One-off smoother application (builds, runs `config.sweeps` sweeps).
pub fn smooth(
    a: &SparseCsr,
    x: &mut [f64],
    b: &[f64],
    config: &SmootherConfig,
    exec: Exec,
) -> Result<()> {
    let s = Smoother::build(a, config.clone(), 0)?;
    s.apply(a, x, b, exec);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::poisson::poisson3d;

    fn all_kinds() -> [SmootherConfig; 4] {
        [
            SmootherConfig::damped_jacobi(),
            SmootherConfig::weighted_jacobi(),
            SmootherConfig::chebyshev(),
            SmootherConfig::gauss_seidel(),
        ]
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        let a = poisson3d(4, 4, 4).unwrap();
        let x_true: Vec<f64> = (0..64).map(|i| (i as f64 * 0.31).sin()).collect();
        let b = a.spmv(&x_true, Exec::serial()).unwrap();
        for cfg in all_kinds() {
            let mut x = x_true.clone();
            smooth(&a, &mut x, &b, &cfg, Exec::serial()).unwrap();
            for (u, v) in x.iter().zip(&x_true) {
                assert!((u - v).abs() < 1e-12, "{:?}", cfg.kind);
            }
        }
    }

    #[test]
    fn undamped_jacobi_solves_diagonal_system_in_one_sweep() {
        let a = SparseCsr::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 4.0), (2, 2, 8.0)]).unwrap();
        let b = vec![2.0, 8.0, 4.0];
        let mut x = vec![0.0; 3];
        let cfg = SmootherConfig {
            damping: 1.0,
            ..SmootherConfig::damped_jacobi()
        };
        smooth(&a, &mut x, &b, &cfg, Exec::serial()).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 0.5]);
    }

    #[test]
    fn every_kind_reduces_the_residual() {
        let a = poisson3d(6, 6, 6).unwrap();
        let n = a.n_rows();
        let b: Vec<f64> = (0..n).map(|i| ((i % 11) as f64) - 5.0).collect();
        for cfg in all_kinds() {
            let mut x: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64) * 0.05).collect();
            let r0 = residual_norm(&a, &x, &b);
            smooth(&a, &mut x, &b, &cfg, Exec::serial()).unwrap();
            let r1 = residual_norm(&a, &x, &b);
            assert!(r1 < r0, "{:?}: {r1} !< {r0}", cfg.kind);
        }
    }

    #[test]
    fn zero_diagonal_rejected() {
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        let err = Smoother::build(&a, SmootherConfig::damped_jacobi(), 0);
        assert!(matches!(err, Err(Error::ZeroPivot { row: 0 })));
    }

    fn residual_norm(a: &SparseCsr, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.spmv(x, Exec::serial()).unwrap();
        ax.iter()
            .zip(b)
            .map(|(u, v)| (v - u) * (v - u))
            .sum::<f64>()
            .sqrt()
    }
}
