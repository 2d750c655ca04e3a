//! Strength-of-connection graphs for coarsening.

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// Which couplings count toward strength.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StrengthRule {
    /// `|a_ij| >= theta * max_{k != i} |a_ik|`.
    Magnitude,
    /// Classical M-matrix rule: `-a_ij >= theta * max_{k != i} (-a_ik)`.
    NegativeCoupling,
}

/// Per-row sets of strongly influencing columns: `j` in `S_i` means row i
/// depends strongly on j.
#[derive(Clone, Debug)]
pub struct StrengthGraph {
    theta: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl StrengthGraph {
    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Strong influencers of row i, ascending.
    pub fn strong(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn n_edges(&self) -> usize {
        self.cols.len()
    }

    /// Transposed adjacency: `transpose[i]` lists the rows that strongly
    /// depend on i.
    pub fn transpose(&self) -> Vec<Vec<usize>> {
        let mut t = vec![Vec::new(); self.n_rows()];
        for i in 0..self.n_rows() {
            for &j in self.strong(i) {
                t[j].push(i);
            }
        }
        t
    }
}

/// Strength graph under the magnitude rule (the default).
pub fn strength(a: &SparseCsr, theta: f64) -> Result<StrengthGraph> {
    strength_with(a, theta, StrengthRule::Magnitude)
}

/// Strength graph under an explicit rule.
pub fn strength_with(a: &SparseCsr, theta: f64, rule: StrengthRule) -> Result<StrengthGraph> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    for i in 0..n {
        let (rcols, rvals) = a.row(i);
        let mut max_off: f64 = 0.0;
        for (&j, &v) in rcols.iter().zip(rvals) {
            if j != i {
                let w = match rule {
                    StrengthRule::Magnitude => v.abs(),
                    StrengthRule::NegativeCoupling => -v,
                };
                max_off = max_off.max(w);
            }
        }
        if max_off > 0.0 {
            let cut = theta * max_off;
            for (&j, &v) in rcols.iter().zip(rvals) {
                if j == i {
                    continue;
                }
                let w = match rule {
                    StrengthRule::Magnitude => v.abs(),
                    StrengthRule::NegativeCoupling => -v,
                };
                if w >= cut && w > 0.0 {
                    cols.push(j);
                }
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(StrengthGraph {
        theta,
        row_ptr,
        cols,
    })
}
