//! Restarted GMRES, right-preconditioned.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::krylov::{start_iterate, Breakdown, Instrumented, SolveReport, SolverConfig};
use crate::op::{LinearOperator, Preconditioner};
use crate::sparse::kernels::{axpby_inplace, dot, norm2};

/// Right-preconditioned restarted GMRES: modified Gram-Schmidt Arnoldi,
/// Givens-rotation least squares, cycle length `cfg.restart`. The
/// preconditioned basis is kept so the update is `x += Z y`. Right
/// preconditioning keeps the minimized quantity equal to the true
/// residual, which is recomputed at every restart. A full cycle without
/// residual decrease is reported as stagnation.
pub fn gmres(
    a: &dyn LinearOperator,
    m: &dyn Preconditioner,
    b: &[f64],
    cfg: &SolverConfig,
    exec: Exec,
) -> Result<(Vec<f64>, SolveReport)> {
    let started = Instant::now();
    if cfg.restart == 0 {
        return Err(Error::Format("gmres restart must be at least 1".into()));
    }
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
    let restart = cfg.restart;

    let mut r = vec![0.0; n];
    ops.spmv(&x, &mut r, exec);
    axpby_inplace(1.0, b, -1.0, &mut r, exec);
    let mut rnorm = norm2(&r, exec);
    report.final_relative_residual = rnorm / norm_b;
    if report.final_relative_residual <= cfg.tolerance {
        report.converged = true;
        ops.finish(&mut report, started);
        return Ok((x, report));
    }

    'outer: loop {
        let cycle_start_rnorm = rnorm;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = rnorm;
        basis.push(r.iter().map(|v| v / rnorm).collect());

        let mut m_used = 0;
        let mut lucky = false;
        for j in 0..restart {
            if report.iterations >= cfg.max_iterations {
                break;
            }
            report.iterations += 1;

            let mut z = vec![0.0; n];
            ops.precond(&basis[j], &mut z, exec);
            let mut w = vec![0.0; n];
            ops.spmv(&z, &mut w, exec);
            zs.push(z);

            let mut col = vec![0.0f64; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v, exec);
                col[i] = hij;
                axpby_inplace(-hij, v, 1.0, &mut w, exec);
            }
            let wnorm = norm2(&w, exec);
            col[j + 1] = wnorm;
            if wnorm == 0.0 {
                lucky = true;
            } else {
                basis.push(w.iter().map(|v| v / wnorm).collect());
            }

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            cs[j] = c;
            sn[j] = s;
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            h.push(col);
            m_used = j + 1;

            let estimate = g[j + 1].abs() / norm_b;
            if estimate <= cfg.tolerance || lucky {
                break;
            }
        }

        if m_used == 0 {
            break 'outer;
        }

        // back-substitute H y = g
        let mut y = vec![0.0f64; m_used];
        for i in (0..m_used).rev() {
            let mut acc = g[i];
            for j in (i + 1)..m_used {
                acc -= h[j][i] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, z) in zs.iter().take(m_used).enumerate() {
            axpby_inplace(y[j], z, 1.0, &mut x, exec);
        }

        // true residual decides convergence and restarts
        ops.spmv(&x, &mut r, exec);
        axpby_inplace(1.0, b, -1.0, &mut r, exec);
        rnorm = norm2(&r, exec);
        report.final_relative_residual = rnorm / norm_b;
        if report.final_relative_residual <= cfg.tolerance {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_iterations {
            break;
        }
        if lucky {
            // exact-subspace breakdown without convergence: stagnated
            report.breakdown = Some(Breakdown::Stagnation);
            break;
        }
        if m_used == restart && rnorm >= cycle_start_rnorm {
            report.breakdown = Some(Breakdown::Stagnation);
            break;
        }
    }

    ops.finish(&mut report, started);
    Ok((x, report))
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if b.abs() > a.abs() {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t, s)
    } else {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c, c * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::op::Identity;
    use crate::sparse::csr::SparseCsr;

    #[test]
    fn nonsymmetric_two_by_two() {
        // rotation-like system
        let a = SparseCsr::from_triplets(
            2,
            2,
            &[(0, 0, 0.6), (0, 1, -0.8), (1, 0, 0.8), (1, 1, 0.6)],
        )
        .unwrap();
        let b = vec![1.0, 2.0];
        let cfg = SolverConfig {
            tolerance: 1e-12,
            ..Default::default()
        };
        let (x, report) = gmres(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged);
        // A is orthogonal: x = A^T b
        let expected = [0.6 * 1.0 + 0.8 * 2.0, -0.8 * 1.0 + 0.6 * 2.0];
        for (u, v) in x.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn stagnation_is_reported() {
        // rotation system: GMRES(1) makes no progress on it
        let a = SparseCsr::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]).unwrap();
        let b = vec![1.0, 0.0];
        let cfg = SolverConfig {
            restart: 1,
            max_iterations: 50,
            ..Default::default()
        };
        let (_, report) = gmres(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(!report.converged);
        assert_eq!(report.breakdown, Some(crate::krylov::Breakdown::Stagnation));
    }

    #[test]
    fn restart_cycles_make_progress() {
        let a = crate::sparse::poisson::poisson3d(6, 6, 6).unwrap();
        let b = vec![1.0; a.n_rows()];
        let cfg = SolverConfig {
            tolerance: 1e-8,
            restart: 5,
            max_iterations: 500,
            ..Default::default()
        };
        let (x, report) = gmres(&a, &Identity, &b, &cfg, Exec::serial()).unwrap();
        assert!(report.converged, "{report:?}");
        let rel = crate::krylov::true_relative_residual(&a, &x, &b, Exec::serial());
        assert!(rel <= 1e-8);
    }
}
