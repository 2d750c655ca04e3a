//! Halo-exchange plan and partitioned SpMV over a shared staging cache.
//!
//! The exchange is modeled the way a host-staged multi-device setup works:
//! the x-entries that any part references from outside its own segment are
//! first copied into a single shared cache (gather), then each part
//! assembles its local workspace from its own segment plus the cache
//! entries it needs and runs a plain local multiply. The two phases are
//! separated by a barrier, and the traffic through the cache is the
//! reported communication volume.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::partition::RowPartition;
use crate::sparse::csr::SparseCsr;

/// Exchange plan for a matrix permuted into partition order.
#[derive(Clone, Debug)]
pub struct CommPlan {
    part_ptr: Vec<usize>,
    /// Global indices staged in the shared cache, ascending. Because parts
    /// own contiguous index ranges, each part's contribution is the
    /// contiguous slice `cache_ptr[p]..cache_ptr[p+1]`.
    cache_globals: Vec<usize>,
    cache_ptr: Vec<usize>,
    /// Per part: global indices referenced outside its own segment.
    recv_idx: Vec<Vec<usize>>,
}

impl CommPlan {
    pub fn n_parts(&self) -> usize {
        self.part_ptr.len() - 1
    }

    /// Shared-cache size (distinct staged entries).
    pub fn cache_len(&self) -> usize {
        self.cache_globals.len()
    }

    /// Global indices part `p` contributes to the cache.
    pub fn send_idx(&self, p: usize) -> &[usize] {
        &self.cache_globals[self.cache_ptr[p]..self.cache_ptr[p + 1]]
    }

    /// Global indices part `p` reads from the cache.
    pub fn recv_idx(&self, p: usize) -> &[usize] {
        &self.recv_idx[p]
    }

    /// Total exchange volume of one multiply: sum of receive-set sizes.
    pub fn comm_volume(&self) -> usize {
        self.recv_idx.iter().map(|r| r.len()).sum()
    }

    fn cache_slot(&self, global: usize) -> usize {
        self.cache_globals
            .binary_search(&global)
            .expect("index is staged in the cache")
    }
}

/// Builds the minimal exchange plan for `a` (already permuted into
/// partition order): part `p` receives exactly the out-of-segment columns
/// its rows reference.
pub fn build_comm_plan(a: &SparseCsr, p: &RowPartition) -> Result<CommPlan> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if p.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "build_comm_plan",
            expected: a.n_rows(),
            actual: p.n_rows(),
        });
    }
    let n_parts = p.n_parts();
    let mut recv_idx = Vec::with_capacity(n_parts);
    let mut needed = vec![false; a.n_rows()];
    for q in 0..n_parts {
        let seg = p.part_range(q);
        let mut recv: Vec<usize> = Vec::new();
        for i in seg.clone() {
            let (cols, _) = a.row(i);
            for &j in cols {
                if !seg.contains(&j) {
                    recv.push(j);
                }
            }
        }
        recv.sort_unstable();
        recv.dedup();
        for &j in &recv {
            needed[j] = true;
        }
        recv_idx.push(recv);
    }
    let cache_globals: Vec<usize> = (0..a.n_rows()).filter(|&j| needed[j]).collect();
    let mut cache_ptr = Vec::with_capacity(n_parts + 1);
    cache_ptr.push(0);
    let mut at = 0;
    for q in 0..n_parts {
        let seg_end = p.part_ptr()[q + 1];
        while at < cache_globals.len() && cache_globals[at] < seg_end {
            at += 1;
        }
        cache_ptr.push(at);
    }
    Ok(CommPlan {
        part_ptr: p.part_ptr().to_vec(),
        cache_globals,
        cache_ptr,
        recv_idx,
    })
}

/// One part's rows with column references resolved against the part
/// workspace `[own segment | received entries]`.
#[derive(Clone, Debug)]
struct PartBlock {
    row_ptr: Vec<usize>,
    /// Workspace index per entry: `< seg_len` means own-segment offset,
    /// otherwise `seg_len + position` in the part's receive list.
    src: Vec<usize>,
    values: Vec<f64>,
    /// Cache slot for each receive-list entry.
    recv_slots: Vec<usize>,
    seg_start: usize,
    seg_len: usize,
}

/// A square matrix split into per-part blocks plus its exchange plan.
#[derive(Clone, Debug)]
pub struct PartitionedMatrix {
    n: usize,
    plan: CommPlan,
    parts: Vec<PartBlock>,
}

impl PartitionedMatrix {
    /// Splits `a` (already permuted into partition order) by the parts of
    /// `p`, building the exchange plan internally.
    pub fn new(a: &SparseCsr, p: &RowPartition) -> Result<Self> {
        let plan = build_comm_plan(a, p)?;
        let n_parts = p.n_parts();
        let mut parts = Vec::with_capacity(n_parts);
        for q in 0..n_parts {
            let seg = p.part_range(q);
            let seg_start = seg.start;
            let seg_len = seg.len();
            let recv = plan.recv_idx(q);
            let recv_slots: Vec<usize> = recv.iter().map(|&g| plan.cache_slot(g)).collect();
            let mut row_ptr = Vec::with_capacity(seg_len + 1);
            row_ptr.push(0);
            let mut src = Vec::new();
            let mut values = Vec::new();
            for i in seg.clone() {
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    let ws = if seg.contains(&j) {
                        j - seg_start
                    } else {
                        seg_len + recv.binary_search(&j).expect("column in receive set")
                    };
                    src.push(ws);
                    values.push(v);
                }
                row_ptr.push(src.len());
            }
            parts.push(PartBlock {
                row_ptr,
                src,
                values,
                recv_slots,
                seg_start,
                seg_len,
            });
        }
        Ok(PartitionedMatrix {
            n: a.n_rows(),
            plan,
            parts,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn plan(&self) -> &CommPlan {
        &self.plan
    }

    /// Exchange volume of one multiply.
    pub fn comm_volume_per_apply(&self) -> usize {
        self.plan.comm_volume()
    }

    /// `y = A x` with `x` and `y` in the permuted index space. Per-row
    /// accumulation visits entries in ascending global column order, the
    /// same order as the whole-matrix multiply.
    pub fn spmv(&self, x: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "partitioned spmv",
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.spmv_into(x, &mut y, exec);
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        assert_eq!(x.len(), self.n, "spmv: x length");
        assert_eq!(y.len(), self.n, "spmv: y length");

        // gather: stage every externally referenced entry in the cache
        let mut cache = vec![0.0f64; self.plan.cache_len()];
        let globals = &self.plan.cache_globals;
        exec::for_each_chunk_mut(exec, &mut cache, |range, out| {
            for (k, slot) in range.enumerate() {
                out[k] = x[globals[slot]];
            }
        });

        // compute (after the gather barrier): each part reads only its own
        // segment of x plus the cache
        let cache = &cache;
        run_parts(exec, split_by_parts(y, &self.parts), |q, out| {
            let part = &self.parts[q];
            let mut ws = Vec::with_capacity(part.seg_len + part.recv_slots.len());
            ws.extend_from_slice(&x[part.seg_start..part.seg_start + part.seg_len]);
            for &slot in &part.recv_slots {
                ws.push(cache[slot]);
            }
            for (local, out_v) in out.iter_mut().enumerate() {
                let (start, end) = (part.row_ptr[local], part.row_ptr[local + 1]);
                let mut acc = 0.0;
                for k in start..end {
                    acc += part.values[k] * ws[part.src[k]];
                }
                *out_v = acc;
            }
        });
    }
}

/// Splits `y` into per-part mutable slices following the block layout.
fn split_by_parts<'a>(y: &'a mut [f64], parts: &[PartBlock]) -> Vec<&'a mut [f64]> {
    let mut slices = Vec::with_capacity(parts.len());
    let mut rest = y;
    for part in parts {
        let (head, tail) = rest.split_at_mut(part.seg_len);
        slices.push(head);
        rest = tail;
    }
    slices
}

/// Runs `f(part_index, slice)` for every part. Parts are distributed over
/// the workers in contiguous groups; each worker processes its group in
/// order, so results do not depend on scheduling.
pub(crate) fn run_parts<F>(exec: Exec, slices: Vec<&mut [f64]>, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    exec::for_each_part(exec, slices, |q, s| f(q, s));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{partition_rows, permute_symmetric};
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
    fn block_diagonal_needs_no_exchange() {
        // two decoupled 2x2 blocks
        let a = SparseCsr::from_triplets(
            4,
            4,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 0, 2.0),
                (1, 1, 1.0),
                (2, 2, 3.0),
                (2, 3, 1.0),
                (3, 2, 1.0),
                (3, 3, 3.0),
            ],
        )
        .unwrap();
        let p = RowPartition::from_labels(&[0, 0, 1, 1], 2).unwrap();
        let plan = build_comm_plan(&a, &p).unwrap();
        assert_eq!(plan.comm_volume(), 0);
        assert!(plan.recv_idx(0).is_empty());
        assert!(plan.recv_idx(1).is_empty());
    }

    #[test]
    fn chain_interior_parts_receive_two() {
        let a = chain(100);
        let p = partition_rows(&a, 4).unwrap();
        let ap = permute_symmetric(&a, &p).unwrap();
        let plan = build_comm_plan(&ap, &p).unwrap();
        assert_eq!(plan.recv_idx(0).len(), 1);
        assert_eq!(plan.recv_idx(1).len(), 2);
        assert_eq!(plan.recv_idx(2).len(), 2);
        assert_eq!(plan.recv_idx(3).len(), 1);
        assert_eq!(plan.comm_volume(), 6);
    }

    #[test]
    fn poisson_recv_matches_cut_edges() {
        let a = poisson3d(10, 10, 10).unwrap();
        let p = partition_rows(&a, 2).unwrap();
        let ap = permute_symmetric(&a, &p).unwrap();
        let plan = build_comm_plan(&ap, &p).unwrap();
        // enumerate cut columns per part straight from the permuted matrix
        let labels = p.labels_new();
        let mut expected = 0usize;
        for q in 0..2 {
            let mut outside: Vec<usize> = Vec::new();
            for i in p.part_range(q) {
                let (cols, _) = ap.row(i);
                for &j in cols {
                    if labels[j] != q {
                        outside.push(j);
                    }
                }
            }
            outside.sort_unstable();
            outside.dedup();
            expected += outside.len();
            assert_eq!(plan.recv_idx(q).len(), outside.len());
        }
        assert_eq!(plan.comm_volume(), expected);
    }

    #[test]
    fn partitioned_spmv_matches_whole_matrix() {
        let a = poisson3d(8, 8, 8).unwrap();
        let n = a.n_rows();
        let x: Vec<f64> = (0..n).map(|i| ((i * 31 % 17) as f64) * 0.21 - 1.0).collect();
        for n_parts in [1usize, 2, 4, 8] {
            let p = partition_rows(&a, n_parts).unwrap();
            let ap = permute_symmetric(&a, &p).unwrap();
            let mut xp = vec![0.0; n];
            for (old, &new) in p.perm().iter().enumerate() {
                xp[new] = x[old];
            }
            let pm = PartitionedMatrix::new(&ap, &p).unwrap();
            for workers in [1usize, 4] {
                let yp = pm.spmv(&xp, Exec::with_workers(workers)).unwrap();
                let reference = ap.spmv(&xp, Exec::serial()).unwrap();
                let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (u, v) in yp.iter().zip(&reference) {
                    assert!((u - v).abs() <= 1e-13 * scale.max(1.0));
                }
            }
        }
    }

    #[test]
    fn single_part_spmv_is_plain_spmv() {
        let a = poisson3d(4, 4, 4).unwrap();
        let p = RowPartition::identity(a.n_rows());
        let pm = PartitionedMatrix::new(&a, &p).unwrap();
        let x: Vec<f64> = (0..a.n_rows()).map(|i| i as f64 * 0.01).collect();
        let y1 = pm.spmv(&x, Exec::serial()).unwrap();
        let y2 = a.spmv(&x, Exec::serial()).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(pm.comm_volume_per_apply(), 0);
    }

    #[test]
    fn every_received_index_is_referenced() {
        let a = chain(12);
        let p = partition_rows(&a, 3).unwrap();
        let ap = permute_symmetric(&a, &p).unwrap();
        let plan = build_comm_plan(&ap, &p).unwrap();
        let labels = p.labels_new();
        for q in 0..3 {
            for &g in plan.recv_idx(q) {
                let references = p.part_range(q).any(|i| ap.row(i).0.contains(&g));
                assert!(references, "part {q} receives unused column {g}");
                assert_ne!(labels[g], q, "part {q} receives its own column {g}");
            }
        }
    }
}
