//! Dense vector kernels used by the iterative solvers.
//!
//! Reductions use the fixed chunked scheme from [`crate::exec`], so `dot`
//! and `norm2` return bitwise-identical results across runs for a fixed
//! worker count.

use crate::exec::{self, Exec};

/// `y = alpha * x + beta * y`.
pub fn axpby_inplace(alpha: f64, x: &[f64], beta: f64, y: &mut [f64], exec: Exec) {
    assert_eq!(x.len(), y.len(), "axpby: length mismatch");
    exec::for_each_chunk_mut(exec, y, |range, out| {
        for (k, i) in range.enumerate() {
            out[k] = alpha * x[i] + beta * out[k];
        }
    });
}

/// `z = alpha * x + beta * y`.
pub fn axpbyz(alpha: f64, x: &[f64], beta: f64, y: &[f64], z: &mut [f64], exec: Exec) {
    assert_eq!(x.len(), y.len(), "axpbyz: length mismatch");
    assert_eq!(x.len(), z.len(), "axpbyz: length mismatch");
    exec::for_each_chunk_mut(exec, z, |range, out| {
        for (k, i) in range.enumerate() {
            out[k] = alpha * x[i] + beta * y[i];
        }
    });
}

/// Inner product `<x, y>`.
pub fn dot(x: &[f64], y: &[f64], exec: Exec) -> f64 {
    assert_eq!(x.len(), y.len(), "dot: length mismatch");
    exec::sum_chunked(exec, x.len(), |i| x[i] * y[i])
}

/// Euclidean norm `sqrt(<x, x>)`.
pub fn norm2(x: &[f64], exec: Exec) -> f64 {
    dot(x, x, exec).sqrt()
}

/// Index of the first non-finite entry, if any.
pub fn find_non_finite(x: &[f64]) -> Option<usize> {
    x.iter().position(|v| !v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axpbyz_identity_case() {
        let x = vec![1.0, -2.0, 3.0];
        let y = vec![9.0, 9.0, 9.0];
        let mut z = vec![0.0; 3];
        axpbyz(1.0, &x, 0.0, &y, &mut z, Exec::serial());
        assert_eq!(z, x);
    }

    #[test]
    fn axpby_updates_in_place() {
        let x = vec![1.0, 2.0];
        let mut y = vec![10.0, 20.0];
        axpby_inplace(2.0, &x, 0.5, &mut y, Exec::serial());
        assert_eq!(y, vec![7.0, 14.0]);
    }

    #[test]
    fn dot_hand_checked() {
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Exec::serial()), 32.0);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn dot_length_mismatch_panics() {
        dot(&[1.0], &[1.0, 2.0], Exec::serial());
    }

    #[test]
    fn dot_bitwise_stable_across_runs() {
        let x: Vec<f64> = (0..10_000).map(|i| ((i * 37) % 101) as f64 * 0.017 - 0.5).collect();
        let y: Vec<f64> = (0..10_000).map(|i| ((i * 53) % 97) as f64 * 0.013 - 0.7).collect();
        for workers in [1, 2, 4, 7] {
            let exec = Exec::with_workers(workers);
            let first = dot(&x, &y, exec);
            for _ in 0..3 {
                assert_eq!(dot(&x, &y, exec).to_bits(), first.to_bits());
            }
        }
    }
}
