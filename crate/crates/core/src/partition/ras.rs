//! Overlapping diagonal-block extraction for additive Schwarz.
//!
//! From a matrix permuted into partition order, each part keeps its pivot
//! block plus `overlap` layers of graph neighbors; every entry whose row or
//! column falls outside the kept set is discarded. The restricted variant
//! of the recombination (overlap rows solved but dropped on the way back)
//! is implemented by the preconditioner on top of these blocks.

use crate::error::{Error, Result};
use crate::partition::RowPartition;
use crate::sparse::csr::SparseCsr;

/// One overlapping diagonal block.
#[derive(Clone, Debug)]
pub struct RasBlock {
    /// Owned row range in the permuted (global) index space.
    pub owned: std::ops::Range<usize>,
    /// Local-to-global row map: owned rows first (ascending), then overlap
    /// rows (ascending).
    pub local_to_global: Vec<usize>,
    /// Number of owned rows (prefix of `local_to_global`).
    pub n_owned: usize,
    /// The block restricted to (owned + overlap) rows and columns.
    pub local_matrix: SparseCsr,
}

impl RasBlock {
    /// Overlap rows (global indices).
    pub fn overlap_rows(&self) -> &[usize] {
        &self.local_to_global[self.n_owned..]
    }
}

/// Per-part overlapping blocks of one partitioned matrix.
#[derive(Clone, Debug)]
pub struct RasBlocks {
    n: usize,
    overlap: usize,
    blocks: Vec<RasBlock>,
}

impl RasBlocks {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[RasBlock] {
        &self.blocks
    }

    pub fn block(&self, p: usize) -> &RasBlock {
        &self.blocks[p]
    }
}

/// Extracts the overlapping diagonal blocks of `a` (already permuted into
/// partition order). With `overlap = 0` each block is exactly its pivot
/// block; each further layer adds the rows reachable through one more
/// stored entry from the current set.
pub fn extract_ras_blocks(
    a: &SparseCsr,
    p: &RowPartition,
    overlap: usize,
) -> Result<RasBlocks> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if p.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "extract_ras_blocks",
            expected: a.n_rows(),
            actual: p.n_rows(),
        });
    }
    let n = a.n_rows();
    let mut blocks = Vec::with_capacity(p.n_parts());
    let mut in_set = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    for q in 0..p.n_parts() {
        let owned = p.part_range(q);
        for i in owned.clone() {
            in_set[i] = true;
            touched.push(i);
        }
        let mut frontier: Vec<usize> = owned.clone().collect();
        let mut overlap_rows: Vec<usize> = Vec::new();
        for _layer in 0..overlap {
            let mut next: Vec<usize> = Vec::new();
            for &i in &frontier {
                let (cols, _) = a.row(i);
                for &j in cols {
                    if !in_set[j] {
                        in_set[j] = true;
                        touched.push(j);
                        next.push(j);
                    }
                }
            }
            next.sort_unstable();
            overlap_rows.extend_from_slice(&next);
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        overlap_rows.sort_unstable();

        let mut local_to_global: Vec<usize> = owned.clone().collect();
        local_to_global.extend_from_slice(&overlap_rows);
        let n_local = local_to_global.len();
        let mut global_to_local = vec![usize::MAX; n];
        for (l, &g) in local_to_global.iter().enumerate() {
            global_to_local[g] = l;
        }

        // restrict to the kept rows and columns; entries leading outside
        // the set are dropped
        let mut row_ptr = Vec::with_capacity(n_local + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for &g in &local_to_global {
            let (cols, vals) = a.row(g);
            row_buf.clear();
            for (&j, &v) in cols.iter().zip(vals) {
                if in_set[j] {
                    row_buf.push((global_to_local[j], v));
                }
            }
            row_buf.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in &row_buf {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let local_matrix =
            SparseCsr::from_raw_unchecked(n_local, n_local, row_ptr, col_idx, values);

        blocks.push(RasBlock {
            owned: owned.clone(),
            local_to_global,
            n_owned: owned.len(),
            local_matrix,
        });

        for &i in &touched {
            in_set[i] = false;
        }
        touched.clear();
    }
    Ok(RasBlocks {
        n,
        overlap,
        blocks,
    })
}
