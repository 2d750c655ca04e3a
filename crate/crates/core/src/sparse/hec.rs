//! Hybrid ELL + CSR matrix storage.
//!
//! The regular part holds each row's leading entries in a fixed-width,
//! column-major (slot-major) ELL block; whatever does not fit spills into a
//! CSR remainder. The slot-major layout follows the column-vector view of
//! the matrix-vector product, which favors coalesced access on wide SIMT
//! hardware; it is kept here even though CPU caches would prefer row-major,
//! so that layout-dependent behavior stays observable.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::sparse::csr::SparseCsr;

/// Default boundary between the ELL part and the CSR remainder.
pub const DEFAULT_ELL_WIDTH_CAP: usize = 20;

/// Default stride rounding unit (multiple-of-warp contract at desk scale).
pub const DEFAULT_STRIDE_UNIT: usize = 32;

/// Hybrid ELL + CSR matrix.
///
/// Padding slots carry the sentinel column index `n_cols` and value 0; the
/// multiply kernel skips them, so garbage in padding values can never leak
/// into results.
#[derive(Clone, Debug)]
pub struct HecMatrix {
    n_rows: usize,
    n_cols: usize,
    ell_width: usize,
    ell_stride: usize,
    ell_col: Vec<usize>,
    ell_val: Vec<f64>,
    csr_rest: SparseCsr,
}

impl HecMatrix {
    /// Converts a canonical CSR matrix, capping the ELL width at
    /// `ell_width_cap` and rounding the ELL stride up to a multiple of
    /// `stride_unit`.
    pub fn from_csr(a: &SparseCsr, ell_width_cap: usize, stride_unit: usize) -> Result<Self> {
        if stride_unit == 0 {
            return Err(Error::Format("stride unit must be at least 1".into()));
        }
        let n_rows = a.n_rows();
        let n_cols = a.n_cols();
        let max_row_nnz = (0..n_rows).map(|i| a.row_nnz(i)).max().unwrap_or(0);
        let ell_width = ell_width_cap.min(max_row_nnz);
        let ell_stride = n_rows.div_ceil(stride_unit) * stride_unit;

        let sentinel = n_cols;
        let mut ell_col = vec![sentinel; ell_width * ell_stride];
        let mut ell_val = vec![0.0; ell_width * ell_stride];

        let mut rest_ptr = vec![0usize; n_rows + 1];
        let mut rest_col = Vec::new();
        let mut rest_val = Vec::new();
        for i in 0..n_rows {
            let (cols, vals) = a.row(i);
            let head = cols.len().min(ell_width);
            for slot in 0..head {
                ell_col[slot * ell_stride + i] = cols[slot];
                ell_val[slot * ell_stride + i] = vals[slot];
            }
            for k in head..cols.len() {
                rest_col.push(cols[k]);
                rest_val.push(vals[k]);
            }
            rest_ptr[i + 1] = rest_col.len();
        }
        let csr_rest = SparseCsr::from_raw_unchecked(n_rows, n_cols, rest_ptr, rest_col, rest_val);
        Ok(HecMatrix {
            n_rows,
            n_cols,
            ell_width,
            ell_stride,
            ell_col,
            ell_val,
            csr_rest,
        })
    }

    /// Conversion with the default width cap (20) and stride unit (32).
    pub fn from_csr_default(a: &SparseCsr) -> Result<Self> {
        HecMatrix::from_csr(a, DEFAULT_ELL_WIDTH_CAP, DEFAULT_STRIDE_UNIT)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn ell_width(&self) -> usize {
        self.ell_width
    }

    pub fn ell_stride(&self) -> usize {
        self.ell_stride
    }

    /// Sentinel column index marking padding slots.
    pub fn padding_sentinel(&self) -> usize {
        self.n_cols
    }

    pub fn ell_col(&self) -> &[usize] {
        &self.ell_col
    }

    pub fn ell_val(&self) -> &[f64] {
        &self.ell_val
    }

    pub fn csr_rest(&self) -> &SparseCsr {
        &self.csr_rest
    }

    /// Stored entries (padding excluded).
    pub fn nnz(&self) -> usize {
        let ell_nnz = self
            .ell_col
            .iter()
            .filter(|&&c| c != self.padding_sentinel())
            .count();
        ell_nnz + self.csr_rest.nnz()
    }

    /// Reconstructs the canonical CSR matrix. Exact round-trip of
    /// [`HecMatrix::from_csr`].
    pub fn to_csr(&self) -> SparseCsr {
        let sentinel = self.padding_sentinel();
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            for slot in 0..self.ell_width {
                let j = self.ell_col[slot * self.ell_stride + i];
                if j == sentinel {
                    break;
                }
                col_idx.push(j);
                values.push(self.ell_val[slot * self.ell_stride + i]);
            }
            let (cols, vals) = self.csr_rest.row(i);
            col_idx.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_ptr[i + 1] = col_idx.len();
        }
        SparseCsr::from_raw_unchecked(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }

    /// `y = A x`. Each row accumulates its ELL slots in slot order, then its
    /// CSR remainder in column order — the same order as a CSR multiply on
    /// the reconstructed matrix, so the two agree bitwise.
    pub fn spmv(&self, x: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv",
                expected: self.n_cols,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y, exec);
        Ok(y)
    }

    /// `y = A x` into a caller-provided buffer.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        assert_eq!(x.len(), self.n_cols, "spmv: x length");
        assert_eq!(y.len(), self.n_rows, "spmv: y length");
        let sentinel = self.padding_sentinel();
        exec::for_each_chunk_mut(exec, y, |range, out| {
            for (k, i) in range.enumerate() {
                let mut acc = 0.0;
                for slot in 0..self.ell_width {
                    let j = self.ell_col[slot * self.ell_stride + i];
                    if j == sentinel {
                        break;
                    }
                    acc += self.ell_val[slot * self.ell_stride + i] * x[j];
                }
                let (cols, vals) = self.csr_rest.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * x[j];
                }
                out[k] = acc;
            }
        });
    }

    /// Fused update `y = alpha * A x + beta * y`.
    pub fn spmv_axpby(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64], exec: Exec) {
        assert_eq!(x.len(), self.n_cols, "spmv_axpby: x length");
        assert_eq!(y.len(), self.n_rows, "spmv_axpby: y length");
        let sentinel = self.padding_sentinel();
        exec::for_each_chunk_mut(exec, y, |range, out| {
            for (k, i) in range.enumerate() {
                let mut acc = 0.0;
                for slot in 0..self.ell_width {
                    let j = self.ell_col[slot * self.ell_stride + i];
                    if j == sentinel {
                        break;
                    }
                    acc += self.ell_val[slot * self.ell_stride + i] * x[j];
                }
                let (cols, vals) = self.csr_rest.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * x[j];
                }
                out[k] = alpha * acc + beta * out[k];
            }
        });
    }

    /// Overwrites every padding slot's value. Test hook: results must not
    /// depend on padding contents.
    #[doc(hidden)]
    pub fn poison_padding(&mut self, value: f64) {
        let sentinel = self.padding_sentinel();
        for (c, v) in self.ell_col.iter().zip(self.ell_val.iter_mut()) {
            if *c == sentinel {
                *v = value;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_conversion() {
        let a = SparseCsr::identity(4);
        let h = HecMatrix::from_csr(&a, 20, 32).unwrap();
        assert_eq!(h.ell_width(), 1);
        assert_eq!(h.ell_stride(), 32);
        assert_eq!(h.csr_rest().nnz(), 0);
        assert_eq!(h.to_csr(), a);
    }

    #[test]
    fn long_row_spills_into_rest() {
        // rows with nnz {2, 2, 2, 25}; cap 20 keeps 20 entries of the long row
        let n = 25;
        let mut triplets = Vec::new();
        for i in 0..3 {
            triplets.push((i, i, 2.0));
            triplets.push((i, i + 1, -1.0));
        }
        for j in 0..25 {
            triplets.push((3, j, j as f64 + 1.0));
        }
        let a = SparseCsr::from_triplets(4, n, &triplets).unwrap();
        let h = HecMatrix::from_csr(&a, 20, 32).unwrap();
        assert_eq!(h.ell_width(), 20);
        assert_eq!(h.csr_rest().nnz(), 5);
        assert_eq!(h.csr_rest().row_nnz(3), 5);
        assert_eq!(h.to_csr(), a);
    }

    #[test]
    fn zero_cap_degenerates_to_csr() {
        let a = SparseCsr::from_triplets(3, 3, &[(0, 0, 1.0), (1, 2, 2.0), (2, 1, 3.0)]).unwrap();
        let h = HecMatrix::from_csr(&a, 0, 32).unwrap();
        assert_eq!(h.ell_width(), 0);
        assert_eq!(h.csr_rest(), &a);
        assert_eq!(h.to_csr(), a);
    }

    #[test]
    fn zero_stride_unit_rejected() {
        let a = SparseCsr::identity(2);
        assert!(HecMatrix::from_csr(&a, 20, 0).is_err());
    }

    #[test]
    fn spmv_matches_hand_result() {
        let a =
            SparseCsr::from_raw(2, 2, vec![0, 2, 4], vec![0, 1, 0, 1], vec![1.0, 2.0, 3.0, 4.0])
                .unwrap();
        let h = HecMatrix::from_csr_default(&a).unwrap();
        let y = h.spmv(&[1.0, 1.0], Exec::serial()).unwrap();
        assert_eq!(y, vec![3.0, 7.0]);
    }

    #[test]
    fn padding_never_contributes() {
        let a = SparseCsr::from_triplets(
            5,
            5,
            &[(0, 0, 1.0), (0, 4, 2.0), (1, 1, 3.0), (3, 2, -1.0), (4, 4, 5.0)],
        )
        .unwrap();
        let mut h = HecMatrix::from_csr(&a, 20, 32).unwrap();
        let x = vec![1.5, -2.0, 3.0, 0.5, 1.0];
        let clean = h.spmv(&x, Exec::serial()).unwrap();
        h.poison_padding(1e300);
        let poisoned = h.spmv(&x, Exec::serial()).unwrap();
        assert_eq!(clean, poisoned);
        assert_eq!(h.to_csr(), a);
    }
}
