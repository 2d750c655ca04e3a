//! Restricted additive Schwarz preconditioning over ILU(k) blocks.
//!
//! The matrix is partitioned, each overlapping diagonal block is solved
//! independently, and block solutions are mapped back restricted: values
//! computed on overlap rows are discarded, so every row of the result comes
//! from exactly the block that owns it. Two parallel levels mirror a
//! multi-device layout: blocks solve concurrently (outer), and each block's
//! triangular solves are level-scheduled (inner). A second partition level
//! can be nested inside the first, in which case each outer block is itself
//! preconditioned by RAS over its own sub-blocks.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ilu::numeric::{ilu, IluFactors, IluOptions};
use crate::op::Preconditioner;
use crate::partition::{
    extract_ras_blocks, partition_rows, permute_symmetric, run_parts, RasBlocks, RowPartition,
};
use crate::sparse::csr::SparseCsr;

/// One partition level: number of parts and overlap layers.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RasLevel {
    pub n_parts: usize,
    pub overlap: usize,
}

enum BlockSolver {
    Ilu(IluFactors),
    Nested(RasIlu),
}

impl BlockSolver {
    fn solve_into(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        match self {
            BlockSolver::Ilu(f) => f.solve_into(r, z, exec),
            BlockSolver::Nested(ras) => ras.apply_into(r, z, exec),
        }
    }
}

/// RAS-ILU(k) preconditioner, optionally nested one level deep (or more).
pub struct RasIlu {
    n: usize,
    partition: RowPartition,
    blocks: RasBlocks,
    solvers: Vec<BlockSolver>,
}

impl RasIlu {
    /// Builds the preconditioner for `a`. `levels[0]` is the outer
    /// partition; further entries partition each block recursively. The
    /// innermost blocks are ILU(k)-factorized with `fill_level`.
    pub fn build(a: &SparseCsr, levels: &[RasLevel], fill_level: usize) -> Result<Self> {
        Self::build_with(a, levels, fill_level, Exec::serial())
    }

    /// As [`RasIlu::build`], factorizing distinct blocks concurrently.
    pub fn build_with(
        a: &SparseCsr,
        levels: &[RasLevel],
        fill_level: usize,
        exec: Exec,
    ) -> Result<Self> {
        let Some((level, rest)) = levels.split_first() else {
            return Err(Error::Partition(
                "RAS needs at least one partition level".into(),
            ));
        };
        let partition = partition_rows(a, level.n_parts)?;
        let ap = permute_symmetric(a, &partition)?;
        let blocks = extract_ras_blocks(&ap, &partition, level.overlap)?;

        let inner_exec = if blocks.n_blocks() > 1 { Exec::serial() } else { exec };
        let build_one = |q: usize| -> Result<BlockSolver> {
            let local = &blocks.block(q).local_matrix;
            if rest.is_empty() {
                let opts = IluOptions {
                    fill_level,
                    diag_shift: None,
                };
                match ilu(local, opts) {
                    Ok(f) => Ok(BlockSolver::Ilu(f)),
                    Err(Error::ZeroPivot { row }) => Err(Error::ZeroPivot {
                        row: blocks.block(q).local_to_global[row],
                    }),
                    Err(e) => Err(e),
                }
            } else {
                Ok(BlockSolver::Nested(RasIlu::build_with(
                    local, rest, fill_level, inner_exec,
                )?))
            }
        };

        let solvers = if exec.workers() > 1 && blocks.n_blocks() > 1 {
            let results: Vec<Vec<Result<BlockSolver>>> =
                crate::exec::map_chunks(exec, blocks.n_blocks(), |range| {
                    range.map(build_one).collect()
                });
            results
                .into_iter()
                .flatten()
                .collect::<Result<Vec<_>>>()?
        } else {
            (0..blocks.n_blocks())
                .map(build_one)
                .collect::<Result<Vec<_>>>()?
        };

        Ok(RasIlu {
            n: a.n_rows(),
            partition,
            blocks,
            solvers,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.n_blocks()
    }

    pub fn partition(&self) -> &RowPartition {
        &self.partition
    }

    /// `z = M^{-1} r`: solve every block on its (owned + overlap) rows and
    /// keep only the owned part of each block solution.
    pub fn apply(&self, r: &[f64], exec: Exec) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        self.apply_into(r, &mut z, exec);
        z
    }

    pub fn apply_into(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        assert_eq!(r.len(), self.n, "ras apply: r length");
        assert_eq!(z.len(), self.n, "ras apply: z length");
        let perm = self.partition.perm();
        let mut r_perm = vec![0.0; self.n];
        for (old, &new) in perm.iter().enumerate() {
            r_perm[new] = r[old];
        }
        let z_perm = apply_restricted(&self.blocks, &r_perm, exec, |q, rl, zl, ex| {
            self.solvers[q].solve_into(rl, zl, ex)
        });
        for (old, &new) in perm.iter().enumerate() {
            z[old] = z_perm[new];
        }
    }
}

impl Preconditioner for RasIlu {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        self.apply_into(r, z, exec);
    }
}

/// Single-level restricted additive Schwarz application over already
/// factorized blocks: `r` lives in the index space the blocks were
/// extracted from.
pub fn ras_apply(
    blocks: &RasBlocks,
    factors: &[IluFactors],
    r: &[f64],
    exec: Exec,
) -> Result<Vec<f64>> {
    if factors.len() != blocks.n_blocks() {
        return Err(Error::Partition(format!(
            "{} blocks but {} factorizations",
            blocks.n_blocks(),
            factors.len()
        )));
    }
    if r.len() != blocks.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "ras_apply",
            expected: blocks.n_rows(),
            actual: r.len(),
        });
    }
    Ok(apply_restricted(blocks, r, exec, |q, rl, zl, ex| {
        factors[q].solve_into(rl, zl, ex)
    }))
}

/// Shared restricted-recombination core: gather each block's rows, solve,
/// scatter only the owned range back. Owned ranges tile the index space,
/// so blocks write disjoint slices.
fn apply_restricted<F>(blocks: &RasBlocks, r: &[f64], exec: Exec, solve: F) -> Vec<f64>
where
    F: Fn(usize, &[f64], &mut [f64], Exec) + Sync,
{
    let mut z = vec![0.0; blocks.n_rows()];
    let inner_exec = if blocks.n_blocks() > 1 {
        Exec::serial()
    } else {
        exec
    };
    let mut slices = Vec::with_capacity(blocks.n_blocks());
    let mut rest: &mut [f64] = &mut z;
    for b in blocks.blocks() {
        let (head, tail) = rest.split_at_mut(b.owned.len());
        slices.push(head);
        rest = tail;
    }
    run_parts(exec, slices, |q, out| {
        let block = blocks.block(q);
        let m = block.local_to_global.len();
        let mut r_local = Vec::with_capacity(m);
        for &g in &block.local_to_global {
            r_local.push(r[g]);
        }
        let mut z_local = vec![0.0; m];
        solve(q, &r_local, &mut z_local, inner_exec);
        out.copy_from_slice(&z_local[..block.n_owned]);
    });
    z
}
