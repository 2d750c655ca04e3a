//! Stabilized biconjugate gradients.

use std::time::Instant;

use crate::error::Result;
use crate::exec::Exec;
use crate::krylov::{start_iterate, Breakdown, Instrumented, SolveReport, SolverConfig};
use crate::op::{LinearOperator, Preconditioner};
use crate::sparse::kernels::{axpby_inplace, dot, norm2};

/// Preconditioned BiCGSTAB with two stopping points per iteration: after
/// the intermediate residual s (taking the half-step update) and after the
/// full update. `rho = 0` and `omega = 0` before convergence are reported
/// as breakdowns.
pub fn bicgstab(
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

    // r = b - A x
    let mut r = vec![0.0; n];
    ops.spmv(&x, &mut r, exec);
    axpby_inplace(1.0, b, -1.0, &mut r, exec);
    let r0 = r.clone();

    let mut rel = norm2(&r, exec) / norm_b;
    if rel <= cfg.tolerance {
        report.converged = true;
        report.final_relative_residual = rel;
        ops.finish(&mut report, started);
        return Ok((x, report));
    }

    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_star = vec![0.0; n];
    let mut s_star = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rho_prev = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;

    for k in 1..=cfg.max_iterations {
        report.iterations = k;
        let rho = dot(&r0, &r, exec);
        if rho == 0.0 {
            report.breakdown = Some(Breakdown::RhoZero);
            report.final_relative_residual = rel;
            break;
        }
        if k == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_prev) * (alpha / omega);
            // p = r + beta * (p - omega * v)
            axpby_inplace(-omega, &v, 1.0, &mut p, exec);
            axpby_inplace(1.0, &r, beta, &mut p, exec);
        }
        ops.precond(&p, &mut p_star, exec);
        ops.spmv(&p_star, &mut v, exec);
        let r0v = dot(&r0, &v, exec);
        if r0v == 0.0 {
            report.breakdown = Some(Breakdown::RhoZero);
            report.final_relative_residual = rel;
            break;
        }
        alpha = rho / r0v;

        // s = r - alpha v  (reuse r as s)
        axpby_inplace(-alpha, &v, 1.0, &mut r, exec);
        let s_rel = norm2(&r, exec) / norm_b;
        if s_rel <= cfg.tolerance {
            axpby_inplace(alpha, &p_star, 1.0, &mut x, exec);
            report.converged = true;
            report.final_relative_residual = s_rel;
            break;
        }

        ops.precond(&r, &mut s_star, exec);
        ops.spmv(&s_star, &mut t, exec);
        let tt = dot(&t, &t, exec);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &r, exec) / tt };

        // x = x + alpha p* + omega s*
        axpby_inplace(alpha, &p_star, 1.0, &mut x, exec);
        axpby_inplace(omega, &s_star, 1.0, &mut x, exec);
        // r = s - omega t
        axpby_inplace(-omega, &t, 1.0, &mut r, exec);

        rel = norm2(&r, exec) / norm_b;
        report.final_relative_residual = rel;
        if rel <= cfg.tolerance {
            report.converged = true;
            break;
        }
        if omega == 0.0 {
            report.breakdown = Some(Breakdown::OmegaZero);
            break;
        }
        rho_prev = rho;
    }

    ops.finish(&mut report, started);
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Identity;
    use crate::sparse::csr::SparseCsr;

    fn diag_dominant(n: usize, seed: u64) -> SparseCsr {
        // deterministic scrambled pattern, strongly diagonally dominant
        let mut t = Vec::new();
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for i in 0..n {
            let mut row_sum = 0.0;
            for _ in 0..3 {
                let j = (next() % n as u64) as usize;
                if j != i {
                    let v = ((next() % 1000) as f64 / 500.0) - 1.0;
                    t.push((i, j, v));
                    row_sum += v.abs();
                }
            }
            t.push((i, i, row_sum + 2.0));
        }
        SparseCsr::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn solves_diag_dominant_system() {
        let a = diag_dominant(50, 7);
        let x_true: Vec<f64> = (0..50).map(|i| ((i % 9) as f64) * 0.25 - 1.0).collect();
        let b = a.spmv(&x_true, Exec::serial()).unwrap();
        let cfg = SolverConfig {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (x, report) = bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged, "{report:?}");
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn lanczos_breakdown_is_reported_not_panicked() {
        // skew coupling makes (r0, A r0) vanish
        let a = SparseCsr::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        let b = vec![1.0, 1.0];
        let cfg = SolverConfig::default();
        let (_, report) = bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.breakdown, Some(Breakdown::RhoZero));
    }

    #[test]
    fn reports_residual_consistent_with_recomputation() {
        let a = diag_dominant(80, 3);
        let b = vec![1.0; 80];
        let cfg = SolverConfig::default();
        let (x, report) = bicgstab(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged);
        let true_rel = crate::krylov::true_relative_residual(&a, &x, &b, Exec::serial());
        assert!((true_rel - report.final_relative_residual).abs() < 1e-10);
    }
}
