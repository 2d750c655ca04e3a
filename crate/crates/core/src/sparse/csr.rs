//! Compressed sparse row storage.
//!
//! `SparseCsr` is the canonical exchange format of the toolkit: every
//! builder produces it and every other format converts from it. Matrices
//! are always held in canonical form — row pointers non-decreasing, column
//! indices strictly increasing within a row, no duplicate entries — which
//! the validating constructors enforce, so downstream kernels can rely on
//! it without re-checking.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCsr {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCsr {
    /// `n_rows` x `n_cols` matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseCsr {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        SparseCsr {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from raw CSR arrays, validating canonical form:
    /// monotone row pointers, strictly increasing in-range column indices
    /// per row, and matching array lengths.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 {
            return Err(Error::Format(format!(
                "row_ptr length {} does not match n_rows {} + 1",
                row_ptr.len(),
                n_rows
            )));
        }
        if row_ptr[0] != 0 {
            return Err(Error::Format("row_ptr[0] must be 0".into()));
        }
        if col_idx.len() != values.len() {
            return Err(Error::Format(format!(
                "col_idx length {} does not match values length {}",
                col_idx.len(),
                values.len()
            )));
        }
        if row_ptr[n_rows] != col_idx.len() {
            return Err(Error::Format(format!(
                "row_ptr[n_rows] = {} does not match nnz {}",
                row_ptr[n_rows],
                col_idx.len()
            )));
        }
        for i in 0..n_rows {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            if start > end {
                return Err(Error::Format(format!("row_ptr decreases at row {i}")));
            }
            let mut prev: Option<usize> = None;
            for &j in &col_idx[start..end] {
                if j >= n_cols {
                    return Err(Error::Format(format!(
                        "column index {j} out of range in row {i} (n_cols {n_cols})"
                    )));
                }
                if let Some(p) = prev {
                    if j == p {
                        return Err(Error::Format(format!(
                            "duplicate column {j} in row {i}"
                        )));
                    }
                    if j < p {
                        return Err(Error::Format(format!(
                            "unsorted columns in row {i} ({j} after {p})"
                        )));
                    }
                }
                prev = Some(j);
            }
        }
        Ok(SparseCsr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Internal constructor for arrays already known to be canonical.
    pub(crate) fn from_raw_unchecked(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(
            SparseCsr::from_raw(
                n_rows,
                n_cols,
                row_ptr.clone(),
                col_idx.clone(),
                values.clone()
            )
            .is_ok(),
            "non-canonical CSR handed to unchecked constructor"
        );
        SparseCsr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a canonical matrix from (row, col, value) triplets. Entries at
    /// the same position are summed; explicit zeros are kept (use
    /// [`SparseCsr::prune_zeros`] to drop them).
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Format(format!(
                    "triplet ({i}, {j}) out of range for {n_rows}x{n_cols}"
                )));
            }
        }
        // ties keep input order so duplicates sum deterministically
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&t| (triplets[t].0, triplets[t].1, t));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &t in &order {
            let (i, j, v) = triplets[t];
            // row_ptr[i + 1] counts row i's emissions; in sorted order a
            // duplicate can only follow its twin immediately
            if row_ptr[i + 1] > 0 && col_idx.last() == Some(&j) {
                let last = values.len() - 1;
                values[last] += v;
                continue;
            }
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseCsr {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[start..end], &self.values[start..end])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// Stored value at (i, j), if present.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    /// Copy with explicitly stored zeros removed.
    pub fn prune_zeros(&self) -> SparseCsr {
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SparseCsr::from_raw_unchecked(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }

    /// Transposed copy.
    pub fn transpose(&self) -> SparseCsr {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let pos = next[j];
                next[j] += 1;
                col_idx[pos] = i;
                values[pos] = v;
            }
        }
        // rows of the transpose come out sorted because the source rows are
        // scanned in ascending row order
        SparseCsr::from_raw_unchecked(self.n_cols, self.n_rows, row_ptr, col_idx, values)
    }

    /// True if the sparsity pattern and values are symmetric to within
    /// `tol` (absolute, entrywise).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let t = self.transpose();
        if t.row_ptr != self.row_ptr || t.col_idx != self.col_idx {
            return false;
        }
        self.values
            .iter()
            .zip(&t.values)
            .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Sparse matrix product `self * other` (row-merge SpGEMM). Rows of the
    /// result are accumulated in the order the left factor's entries appear,
    /// so the result is deterministic.
    pub fn matmul(&self, other: &SparseCsr) -> Result<SparseCsr> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: self.n_cols,
                actual: other.n_rows,
            });
        }
        let n_rows = self.n_rows;
        let n_cols = other.n_cols;
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();

        let mut acc = vec![0.0f64; n_cols];
        let mut marker = vec![usize::MAX; n_cols];
        let mut row_cols: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            row_cols.clear();
            let (a_cols, a_vals) = self.row(i);
            for (&k, &av) in a_cols.iter().zip(a_vals) {
                let (b_cols, b_vals) = other.row(k);
                for (&j, &bv) in b_cols.iter().zip(b_vals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        row_cols.push(j);
                    }
                    acc[j] += av * bv;
                }
            }
            row_cols.sort_unstable();
            for &j in &row_cols {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseCsr::from_raw_unchecked(
            n_rows, n_cols, row_ptr, col_idx, values,
        ))
    }

    /// `y = A x`.
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

    /// `y = A x` into a caller-provided buffer. Lengths are asserted.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        assert_eq!(x.len(), self.n_cols, "spmv: x length");
        assert_eq!(y.len(), self.n_rows, "spmv: y length");
        exec::for_each_chunk_mut(exec, y, |range, out| {
            for (k, i) in range.enumerate() {
                let (cols, vals) = self.row(i);
                let mut acc = 0.0;
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
        exec::for_each_chunk_mut(exec, y, |range, out| {
            for (k, i) in range.enumerate() {
                let (cols, vals) = self.row(i);
                let mut acc = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * x[j];
                }
                out[k] = alpha * acc + beta * out[k];
            }
        });
    }
}
