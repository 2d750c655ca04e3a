//! Preconditioned Krylov solvers: BiCGSTAB, restarted GMRES, and CG.
//!
//! The driver loops are single-threaded orchestration; all parallelism
//! lives in the operator applications, the vector kernels, and the
//! preconditioner underneath. Convergence is declared on the relative
//! residual `||r|| / ||b||`, and a zero right-hand side returns x = 0
//! immediately. Breakdowns are reported in the [`SolveReport`], never
//! panicked.

mod bicgstab;
mod cg;
mod gmres;

pub use bicgstab::bicgstab;
pub use cg::cg;
pub use gmres::gmres;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::op::{LinearOperator, Preconditioner};
use crate::sparse::kernels;

/// Stopping rule and iteration limits.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Relative-residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Cycle length for restarted GMRES; ignored by the other solvers.
    pub restart: usize,
    /// Starting iterate; zero when absent.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            max_iterations: 1000,
            restart: 30,
            initial_guess: None,
        }
    }
}

/// Why a solve stopped early.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Breakdown {
    /// `(r0, r)` or `(r0, v)` vanished in BiCGSTAB.
    RhoZero,
    /// The BiCGSTAB stabilization weight vanished before convergence.
    OmegaZero,
    /// A full GMRES restart cycle produced no residual decrease.
    Stagnation,
    /// CG observed `p^T A p <= 0`.
    IndefiniteOperator,
    /// Residual grew over consecutive cycles (multigrid solve).
    Divergence,
}

impl std::fmt::Display for Breakdown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Breakdown::RhoZero => "rho-zero",
            Breakdown::OmegaZero => "omega-zero",
            Breakdown::Stagnation => "stagnation",
            Breakdown::IndefiniteOperator => "indefinite-operator",
            Breakdown::Divergence => "divergence",
        };
        f.write_str(s)
    }
}

/// Outcome of one solve. `final_relative_residual` is the residual the
/// stopping decision was made on; when `converged` is set it is at or
/// below the configured tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    pub breakdown: Option<Breakdown>,
    /// Preconditioner/operator setup time, filled by the caller that owns
    /// the setup.
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub spmv_seconds: f64,
    pub precond_seconds: f64,
    /// Staged exchange volume summed over all operator applications.
    pub comm_volume: u64,
}

impl SolveReport {
    fn new() -> Self {
        SolveReport {
            iterations: 0,
            final_relative_residual: 0.0,
            converged: false,
            breakdown: None,
            setup_seconds: 0.0,
            solve_seconds: 0.0,
            spmv_seconds: 0.0,
            precond_seconds: 0.0,
            comm_volume: 0,
        }
    }
}

/// `||b - A x|| / ||b||`, recomputed from scratch.
pub fn true_relative_residual(
    a: &dyn LinearOperator,
    x: &[f64],
    b: &[f64],
    exec: Exec,
) -> f64 {
    let norm_b = kernels::norm2(b, exec);
    if norm_b == 0.0 {
        return kernels::norm2(x, exec);
    }
    let mut ax = vec![0.0; b.len()];
    a.apply_into(x, &mut ax, exec);
    kernels::axpby_inplace(1.0, b, -1.0, &mut ax, exec);
    kernels::norm2(&ax, exec) / norm_b
}

/// Validates a solve's inputs and returns the starting iterate.
fn start_iterate(
    a: &dyn LinearOperator,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if b.len() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "solve",
            expected: a.n_rows(),
            actual: b.len(),
        });
    }
    if let Some(i) = kernels::find_non_finite(b) {
        return Err(Error::NonFinite { index: i });
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(Error::Format("tolerance must be positive".into()));
    }
    match &cfg.initial_guess {
        Some(x0) => {
            if x0.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    context: "initial guess",
                    expected: b.len(),
                    actual: x0.len(),
                });
            }
            if let Some(i) = kernels::find_non_finite(x0) {
                return Err(Error::NonFinite { index: i });
            }
            Ok(x0.clone())
        }
        None => Ok(vec![0.0; b.len()]),
    }
}

/// Wraps the operator and preconditioner with per-call timing and
/// exchange-volume accounting.
struct Instrumented<'a> {
    a: &'a dyn LinearOperator,
    m: &'a dyn Preconditioner,
    spmv_seconds: f64,
    precond_seconds: f64,
    spmv_count: u64,
}

impl<'a> Instrumented<'a> {
    fn new(a: &'a dyn LinearOperator, m: &'a dyn Preconditioner) -> Self {
        Instrumented {
            a,
            m,
            spmv_seconds: 0.0,
            precond_seconds: 0.0,
            spmv_count: 0,
        }
    }

    fn spmv(&mut self, x: &[f64], y: &mut [f64], exec: Exec) {
        let t = Instant::now();
        self.a.apply_into(x, y, exec);
        self.spmv_seconds += t.elapsed().as_secs_f64();
        self.spmv_count += 1;
    }

    fn precond(&mut self, r: &[f64], z: &mut [f64], exec: Exec) {
        let t = Instant::now();
        self.m.apply_to(r, z, exec);
        self.precond_seconds += t.elapsed().as_secs_f64();
    }

    fn finish(&self, report: &mut SolveReport, started: Instant) {
        report.solve_seconds = started.elapsed().as_secs_f64();
        report.spmv_seconds = self.spmv_seconds;
        report.precond_seconds = self.precond_seconds;
        report.comm_volume = self.spmv_count * self.a.comm_volume_per_apply() as u64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Identity;
    use crate::sparse::csr::SparseCsr;

    #[test]
    fn zero_rhs_short_circuits_all_solvers() {
        let a = SparseCsr::identity(4);
        let b = vec![0.0; 4];
        let cfg = SolverConfig::default();
        for (x, report) in [
            bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
            gmres(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
            cg(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
        ] {
            assert_eq!(x, vec![0.0; 4]);
            assert!(report.converged);
            assert_eq!(report.iterations, 0);
        }
    }

    #[test]
    fn non_finite_rhs_rejected() {
        let a = SparseCsr::identity(2);
        let b = vec![1.0, f64::NAN];
        let cfg = SolverConfig::default();
        assert!(bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).is_err());
    }

    #[test]
    fn identity_system_converges_in_one_iteration() {
        let a = SparseCsr::identity(6);
        let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let cfg = SolverConfig::default();
        for (x, report) in [
            bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
            gmres(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
            cg(&a, &Identity, &b, &cfg, Exec::serial()).unwrap(),
        ] {
            assert!(report.converged);
            assert_eq!(report.iterations, 1);
            for (u, v) in x.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
