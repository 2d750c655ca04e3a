//! Preconditioned conjugate gradients.

use std::time::Instant;

use crate::error::Result;
use crate::exec::Exec;
use crate::krylov::{start_iterate, Breakdown, Instrumented, SolveReport, SolverConfig};
use crate::op::{LinearOperator, Preconditioner};
use crate::sparse::kernels::{axpby_inplace, dot, norm2};

/// Standard preconditioned CG. The operator must be symmetric positive
/// definite; symmetry is the caller's responsibility and is not checked
/// here. A non-positive curvature `p^T A p <= 0` is reported as an
/// indefinite-operator breakdown.
pub fn cg(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    cfg: &SolverConfig,
    exec: Exec,
) -> Result<(Vec<f64>, SolveReport)> {
    let started = Instant::now();
    let mut x = start_iterate(a, b, cfg)?;
    let mut report = SolveReport::new();
    let n = b.len();

    let norm_b = norm2(b, exec);
    if norm_b == 0.0 {
        x.fill(0.0);
        report.converged = true;
        report.solve_seconds = started.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut ops = Instrumented::new(a, m);

    let mut r = vec![0.0; n];
    ops.spmv(&x, &mut r, exec);
    axpby_inplace(1.0, b, -1.0, &mut r, exec);
    let mut rel = norm2(&r, exec) / norm_b;
    report.final_relative_residual = rel;
    if rel <= cfg.tolerance {
        report.converged = true;
        ops.finish(&mut report, started);
        return Ok((x, report));
    }

    let mut z = vec![0.0; n];
    ops.precond(&r, &mut z, exec);
    let mut p = z.clone();
    let mut rz = dot(&r, &z, exec);
    let mut q = vec![0.0; n];

    for k in 1..=cfg.max_iterations {
        report.iterations = k;
        ops.spmv(&p, &mut q, exec);
        let pq = dot(&p, &q, exec);
        if pq <= 0.0 {
            report.breakdown = Some(Breakdown::IndefiniteOperator);
            report.final_relative_residual = rel;
            break;
        }
        let alpha = rz / pq;
        axpby_inplace(alpha, &p, 1.0, &mut x, exec);
        axpby_inplace(-alpha, &q, 1.0, &mut r, exec);
        rel = norm2(&r, exec) / norm_b;
        report.final_relative_residual = rel;
        if rel <= cfg.tolerance {
            report.converged = true;
            break;
        }
        ops.precond(&r, &mut z, exec);
        let rz_new = dot(&r, &z, exec);
        let beta = rz_new / rz;
        rz = rz_new;
        axpby_inplace(1.0, &z, beta, &mut p, exec);
    }

    ops.finish(&mut report, started);
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Identity;
    use crate::sparse::csr::SparseCsr;

    #[test]
    fn diagonal_matrix_converges_within_distinct_eigenvalue_count() {
        // spectrum {1, 2, 3} repeated: at most 3 CG iterations
        let n = 30;
        let t: Vec<(usize, usize, f64)> =
            (0..n).map(|i| (i, i, 1.0 + (i % 3) as f64)).collect();
        let a = SparseCsr::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.77).cos()).collect();
        let cfg = SolverConfig {
            tolerance: 1e-10,
            ..Default::default()
        };
        let (x, report) = cg(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged);
        assert!(report.iterations <= 3, "took {}", report.iterations);
        for i in 0..n {
            let d = 1.0 + (i % 3) as f64;
            assert!((x[i] - b[i] / d).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_operator_detected() {
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let b = vec![0.0, 1.0];
        let cfg = SolverConfig::default();
        let (_, report) = cg(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.breakdown, Some(Breakdown::IndefiniteOperator));
    }

    #[test]
    fn solves_small_poisson_to_dense_accuracy() {
        let a = crate::sparse::poisson::poisson3d(5, 5, 5).unwrap();
        let x_true: Vec<f64> = (0..125).map(|i| ((i * 17 % 13) as f64) * 0.1 - 0.6).collect();
        let b = a.spmv(&x_true, Exec::serial()).unwrap();
        let cfg = SolverConfig {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (x, report) = cg(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-8);
        }
    }
}
