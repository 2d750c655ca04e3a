//! Shared test support: dense oracles (independent of the library's
//! compute paths) and deterministic random problem generators.

// each integration-test binary uses a different subset of this module
#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparsekit::SparseCsr;

/// Row-major dense matrix used as an oracle.
pub struct Dense {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn from_csr(a: &SparseCsr) -> Dense {
        let (n_rows, n_cols) = (a.n_rows(), a.n_cols());
        let mut data = vec![0.0; n_rows * n_cols];
        for i in 0..n_rows {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                data[i * n_cols + j] += v;
            }
        }
        Dense {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..self.n_cols {
                    acc += self.data[i * self.n_cols + j] * x[j];
                }
                acc
            })
            .collect()
    }

    /// Plain Gaussian elimination with partial pivoting; written here so
    /// solver tests have an oracle that shares no code with the library.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let mut m = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            for r in (k + 1)..n {
                if m[r * n + k].abs() > m[piv * n + k].abs() {
                    piv = r;
                }
            }
            assert!(m[piv * n + k] != 0.0, "oracle: singular matrix");
            if piv != k {
                for j in 0..n {
                    m.swap(k * n + j, piv * n + j);
                }
                x.swap(k, piv);
            }
            for r in (k + 1)..n {
                let f = m[r * n + k] / m[k * n + k];
                if f != 0.0 {
                    for j in k..n {
                        m[r * n + j] -= f * m[k * n + j];
                    }
                    x[r] -= f * x[k];
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= m[i * n + j] * x[j];
            }
            x[i] = acc / m[i * n + i];
        }
        x
    }

    /// `sqrt(e^T A e)` for SPD A.
    pub fn energy_norm(&self, e: &[f64]) -> f64 {
        let ae = self.matvec(e);
        e.iter().zip(&ae).map(|(u, v)| u * v).sum::<f64>().sqrt()
    }
}

/// Compensated (Kahan) summation dot product.
pub fn kahan_dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for (u, v) in x.iter().zip(y) {
        let term = u * v - c;
        let t = sum + term;
        c = (t - sum) - term;
        sum = t;
    }
    sum
}

/// Max abs difference scaled by the larger infinity norm (floor 1).
pub fn rel_inf_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
        / scale
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// Random canonical sparse matrix with the given density (no structural
/// guarantees).
pub fn random_sparse(n_rows: usize, n_cols: usize, density: f64, seed: u64) -> SparseCsr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for i in 0..n_rows {
        for j in 0..n_cols {
            if rng.random::<f64>() < density {
                triplets.push((i, j, rng.random::<f64>() * 2.0 - 1.0));
            }
        }
    }
    SparseCsr::from_triplets(n_rows, n_cols, &triplets).unwrap()
}

/// Random symmetric, strictly diagonally dominant matrix: well
/// conditioned, SPD, safe for every solver in the suite.
pub fn random_spd(n: usize, extra_per_row: usize, seed: u64) -> SparseCsr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let mut row_sum = vec![0.0f64; n];
    for i in 0..n {
        for _ in 0..extra_per_row {
            let j = rng.random_range(0..n);
            let v = rng.random::<f64>() - 0.5;
            if j != i {
                triplets.push((i, j, v));
                triplets.push((j, i, v));
                row_sum[i] += v.abs();
                row_sum[j] += v.abs();
            }
        }
    }
    for i in 0..n {
        triplets.push((i, i, row_sum[i] + 1.0 + rng.random::<f64>()));
    }
    SparseCsr::from_triplets(n, n, &triplets).unwrap()
}

/// Chain Laplacian (tridiagonal [-1, 2, -1]).
pub fn chain_laplacian(n: usize) -> SparseCsr {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseCsr::from_triplets(n, n, &t).unwrap()
}
