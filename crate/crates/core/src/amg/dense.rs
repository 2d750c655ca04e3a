//! Dense LU with partial pivoting for the coarsest level.

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

#[derive(Clone, Debug)]
pub(crate) struct DenseLu {
    n: usize,
    /// Row-major packed L\U.
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &SparseCsr) -> Result<DenseLu> {
        assert!(a.is_square(), "coarse solve needs a square matrix");
        let n = a.n_rows();
        let mut lu = vec![0.0f64; n * n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                lu[i * n + j] = v;
            }
        }
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            let mut best_mag = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let mag = lu[r * n + k].abs();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag == 0.0 {
                return Err(Error::SingularCoarseSolve);
            }
            if best != k {
                for j in 0..n {
                    lu.swap(k * n + j, best * n + j);
                }
                piv.swap(k, best);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[r * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(x.len(), n);
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_shuffled_system() {
        // needs pivoting: zero leading entry
        let a = SparseCsr::from_triplets(
            3,
            3,
            &[
                (0, 1, 2.0),
                (0, 2, 1.0),
                (1, 0, 1.0),
                (1, 1, 1.0),
                (2, 0, 4.0),
                (2, 2, -1.0),
            ],
        )
        .unwrap();
        let lu = DenseLu::factor(&a).unwrap();
        let x_true = [1.0, -2.0, 3.0];
        let b: Vec<f64> = (0..3)
            .map(|i| {
                let (cols, vals) = a.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x_true[j]).sum()
            })
            .collect();
        let mut x = vec![0.0; 3];
        lu.solve_into(&b, &mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            DenseLu::factor(&a),
            Err(Error::SingularCoarseSolve)
        ));
    }
}
