//! Row partitioning, symmetric permutation, the staged halo-exchange plan,
//! partitioned SpMV, and additive-Schwarz block extraction.
//!
//! The default partitioner orders rows by Cuthill-McKee (BFS level sets
//! from a pseudo-peripheral vertex, so nonzeros concentrate near the
//! diagonal) and splits the ordering into contiguous balanced ranges. It is
//! deterministic and dependency-free; the [`Partitioner`] trait lets an
//! external partitioner replace it under the same contract.

mod comm;
mod order;
mod ras;

pub use comm::{build_comm_plan, CommPlan, PartitionedMatrix};
pub(crate) use comm::run_parts;
pub use ras::{extract_ras_blocks, RasBlock, RasBlocks};

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// A partition of matrix rows into contiguous ranges of a permuted index
/// space: `perm` maps old row indices to new ones, and part `p` owns new
/// indices `part_ptr[p]..part_ptr[p+1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowPartition {
    perm: Vec<usize>,
    part_ptr: Vec<usize>,
}

impl RowPartition {
    /// Single part, identity permutation.
    pub fn identity(n: usize) -> Self {
        RowPartition {
            perm: (0..n).collect(),
            part_ptr: vec![0, n],
        }
    }

    /// Builds a partition from per-row part labels (old index space). Rows
    /// keep their relative order within each part.
    pub fn from_labels(labels: &[usize], n_parts: usize) -> Result<Self> {
        let n = labels.len();
        if n_parts == 0 {
            return Err(Error::Partition("n_parts must be at least 1".into()));
        }
        let mut counts = vec![0usize; n_parts + 1];
        for (i, &p) in labels.iter().enumerate() {
            if p >= n_parts {
                return Err(Error::Partition(format!(
                    "row {i} labeled {p}, but n_parts is {n_parts}"
                )));
            }
            counts[p + 1] += 1;
        }
        for p in 0..n_parts {
            counts[p + 1] += counts[p];
        }
        let part_ptr = counts.clone();
        let mut next = counts;
        let mut perm = vec![0usize; n];
        for (i, &p) in labels.iter().enumerate() {
            perm[i] = next[p];
            next[p] += 1;
        }
        Ok(RowPartition { perm, part_ptr })
    }

    pub(crate) fn from_order(order: &[usize], n_parts: usize) -> Self {
        let n = order.len();
        let mut perm = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let base = n / n_parts;
        let rem = n % n_parts;
        let mut part_ptr = Vec::with_capacity(n_parts + 1);
        part_ptr.push(0);
        let mut at = 0;
        for p in 0..n_parts {
            at += base + usize::from(p < rem);
            part_ptr.push(at);
        }
        RowPartition { perm, part_ptr }
    }

    pub fn n_rows(&self) -> usize {
        self.perm.len()
    }

    pub fn n_parts(&self) -> usize {
        self.part_ptr.len() - 1
    }

    /// Old-to-new row permutation.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// New-index range boundaries per part.
    pub fn part_ptr(&self) -> &[usize] {
        &self.part_ptr
    }

    pub fn part_range(&self, p: usize) -> std::ops::Range<usize> {
        self.part_ptr[p]..self.part_ptr[p + 1]
    }

    /// `order[new] = old` (inverse of `perm`).
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0usize; self.perm.len()];
        for (old, &new) in self.perm.iter().enumerate() {
            order[new] = old;
        }
        order
    }

    /// Part label per new row index.
    pub fn labels_new(&self) -> Vec<usize> {
        let mut labels = vec![0usize; self.n_rows()];
        for p in 0..self.n_parts() {
            for l in &mut labels[self.part_range(p)] {
                *l = p;
            }
        }
        labels
    }

    /// Part label per old row index.
    pub fn labels_old(&self) -> Vec<usize> {
        let new_labels = self.labels_new();
        self.perm.iter().map(|&new| new_labels[new]).collect()
    }
}

/// Pluggable row-partitioning strategy.
pub trait Partitioner {
    fn partition(&self, a: &SparseCsr, n_parts: usize) -> Result<RowPartition>;
}

/// Default partitioner: Cuthill-McKee ordering followed by a contiguous
/// balanced split. Parts differ in size by at most one. Disconnected
/// graphs are ordered component by component, largest first.
#[derive(Default, Debug, Clone, Copy)]
pub struct CmBisection;

impl Partitioner for CmBisection {
    fn partition(&self, a: &SparseCsr, n_parts: usize) -> Result<RowPartition> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                n_rows: a.n_rows(),
                n_cols: a.n_cols(),
            });
        }
        if n_parts == 0 {
            return Err(Error::Partition("n_parts must be at least 1".into()));
        }
        if n_parts > a.n_rows() {
            return Err(Error::Partition(format!(
                "n_parts {} exceeds row count {}",
                n_parts,
                a.n_rows()
            )));
        }
        if n_parts == 1 {
            return Ok(RowPartition::identity(a.n_rows()));
        }
        let adj = order::Adjacency::from_pattern(a);
        let cm = order::cuthill_mckee(&adj);
        Ok(RowPartition::from_order(&cm, n_parts))
    }
}

/// Partitions with the default strategy. See [`CmBisection`].
pub fn partition_rows(a: &SparseCsr, n_parts: usize) -> Result<RowPartition> {
    CmBisection.partition(a, n_parts)
}

/// Symmetric permutation `B = P A P^T`: entry (i, j) moves to
/// (perm[i], perm[j]).
pub fn permute_symmetric(a: &SparseCsr, p: &RowPartition) -> Result<SparseCsr> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if p.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "permute_symmetric",
            expected: a.n_rows(),
            actual: p.n_rows(),
        });
    }
    let n = a.n_rows();
    let order = p.order();
    let perm = p.perm();
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut values = Vec::with_capacity(a.nnz());
    let mut row_buf: Vec<(usize, f64)> = Vec::new();
    for new_row in 0..n {
        let old_row = order[new_row];
        let (cols, vals) = a.row(old_row);
        row_buf.clear();
        row_buf.extend(cols.iter().zip(vals).map(|(&j, &v)| (perm[j], v)));
        row_buf.sort_unstable_by_key(|&(j, _)| j);
        for &(j, v) in &row_buf {
            col_idx.push(j);
            values.push(v);
        }
        row_ptr[new_row + 1] = col_idx.len();
    }
    Ok(SparseCsr::from_raw_unchecked(n, n, row_ptr, col_idx, values))
}

/// Number of stored entries falling outside the diagonal blocks of a
/// matrix already permuted into partition order.
pub fn off_block_nnz(a_permuted: &SparseCsr, p: &RowPartition) -> usize {
    let labels = p.labels_new();
    let mut count = 0;
    for i in 0..a_permuted.n_rows() {
        let (cols, _) = a_permuted.row(i);
        count += cols.iter().filter(|&&j| labels[j] != labels[i]).count();
    }
    count
}

/// Writes a partition as `(row, part)` pairs in the original row indexing.
pub fn write_partition<W: Write>(mut w: W, p: &RowPartition) -> Result<()> {
    writeln!(w, "% rows {} parts {}", p.n_rows(), p.n_parts())?;
    for (row, part) in p.labels_old().iter().enumerate() {
        writeln!(w, "{row} {part}")?;
    }
    Ok(())
}

/// Reads a `(row, part)` listing written by [`write_partition`] (or by an
/// external partitioner using the same format).
pub fn read_partition<R: BufRead>(reader: R) -> Result<RowPartition> {
    let mut labels: Vec<(usize, usize)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let row: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "cannot parse row index".into(),
            })?;
        let part: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "cannot parse part index".into(),
            })?;
        labels.push((row, part));
    }
    let n = labels.len();
    let mut by_row = vec![usize::MAX; n];
    for (row, part) in labels {
        if row >= n || by_row[row] != usize::MAX {
            return Err(Error::Partition(format!(
                "partition file does not list each of {n} rows exactly once (row {row})"
            )));
        }
        by_row[row] = part;
    }
    let n_parts = by_row.iter().copied().max().map_or(1, |m| m + 1);
    RowPartition::from_labels(&by_row, n_parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::sparse::poisson::poisson3d;

    fn chain(n: usize) -> SparseCsr {
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

    #[test]
    fn single_part_is_identity() {
        let a = poisson3d(3, 3, 3).unwrap();
        let p = partition_rows(&a, 1).unwrap();
        assert_eq!(p.n_parts(), 1);
        assert_eq!(p.perm(), (0..27).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn chain_four_parts_cuts_six_entries() {
        let a = chain(100);
        let p = partition_rows(&a, 4).unwrap();
        for q in 0..4 {
            assert_eq!(p.part_range(q).len(), 25);
        }
        let ap = permute_symmetric(&a, &p).unwrap();
        // 3 cut edges, each stored in both directions
        assert_eq!(off_block_nnz(&ap, &p), 6);
    }

    #[test]
    fn poisson_parts_are_balanced() {
        let a = poisson3d(20, 20, 20).unwrap();
        let p = partition_rows(&a, 8).unwrap();
        let sizes: Vec<usize> = (0..8).map(|q| p.part_range(q).len()).collect();
        assert!(sizes.iter().all(|&s| s == 1000));
        let ap = permute_symmetric(&a, &p).unwrap();
        let cut = off_block_nnz(&ap, &p) as f64 / ap.nnz() as f64;
        assert!(cut < 0.5, "cut fraction {cut} is implausibly high");
    }

    #[test]
    fn too_many_parts_rejected() {
        let a = chain(4);
        assert!(partition_rows(&a, 5).is_err());
    }

    #[test]
    fn identity_permutation_preserves_matrix() {
        let a = chain(12);
        let p = RowPartition::identity(12);
        let b = permute_symmetric(&a, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reversal_permutation_hand_check() {
        // [[1,2],[3,4]] reversed -> [[4,3],[2,1]]
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)])
            .unwrap();
        let p = RowPartition::from_labels(&[1, 0], 2).unwrap();
        assert_eq!(p.perm(), &[1, 0]);
        let b = permute_symmetric(&a, &p).unwrap();
        assert_eq!(b.get(0, 0), Some(4.0));
        assert_eq!(b.get(0, 1), Some(3.0));
        assert_eq!(b.get(1, 0), Some(2.0));
        assert_eq!(b.get(1, 1), Some(1.0));
    }

    #[test]
    fn permuted_spmv_commutes() {
        let a = poisson3d(5, 4, 3).unwrap();
        let n = a.n_rows();
        let p = partition_rows(&a, 3).unwrap();
        let ap = permute_symmetric(&a, &p).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut px = vec![0.0; n];
        for (old, &new) in p.perm().iter().enumerate() {
            px[new] = x[old];
        }
        let y = a.spmv(&x, Exec::serial()).unwrap();
        let py_direct = ap.spmv(&px, Exec::serial()).unwrap();
        for (old, &new) in p.perm().iter().enumerate() {
            assert!(
                (py_direct[new] - y[old]).abs() <= 1e-14 * y[old].abs().max(1.0),
                "row {old}: {} vs {}",
                py_direct[new],
                y[old]
            );
        }
    }

    #[test]
    fn partition_dump_round_trip() {
        let a = poisson3d(4, 4, 2).unwrap();
        let p = partition_rows(&a, 4).unwrap();
        let mut buf = Vec::new();
        write_partition(&mut buf, &p).unwrap();
        let q = read_partition(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(p.labels_old(), q.labels_old());
        assert_eq!(q.n_parts(), 4);
    }
}
