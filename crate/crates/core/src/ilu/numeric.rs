//! Numeric ILU(k) factorization and level-scheduled triangular solves.

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::ilu::schedule::LevelSchedule;
use crate::ilu::symbolic::{ilu_symbolic, FillLevels};
use crate::op::Preconditioner;
use crate::sparse::csr::SparseCsr;

/// Pivots with magnitude below this are treated as zero. No pivoting is
/// performed; see [`IluOptions::diag_shift`] for the opt-in fallback.
const PIVOT_FLOOR: f64 = 1e-300;

/// Combined incomplete factors: the strictly lower triangle holds L (unit
/// diagonal implicit), the diagonal and upper triangle hold U, all in one
/// CSR over the ILU(k) pattern, with per-row diagonal positions for O(1)
/// pivot access and the level schedules for both solve sweeps.
#[derive(Clone, Debug)]
pub struct IluFactors {
    combined: SparseCsr,
    diag_pos: Vec<usize>,
    lower_schedule: LevelSchedule,
    upper_schedule: LevelSchedule,
}

/// Options for the one-call factorization entry point.
#[derive(Clone, Copy, Debug, Default)]
pub struct IluOptions {
    /// Fill level k.
    pub fill_level: usize,
    /// When set, a zero pivot triggers one retry on `A + shift * I`.
    pub diag_shift: Option<f64>,
}

/// Symbolic plus numeric factorization in one call.
pub fn ilu(a: &SparseCsr, opts: IluOptions) -> Result<IluFactors> {
    let fills = ilu_symbolic(a, opts.fill_level)?;
    match ilu_factorize(a, &fills) {
        Err(Error::ZeroPivot { .. }) if opts.diag_shift.is_some() => {
            let shift = opts.diag_shift.unwrap();
            let shifted = add_diagonal(a, shift);
            ilu_factorize(&shifted, &fills)
        }
        other => other,
    }
}

fn add_diagonal(a: &SparseCsr, shift: f64) -> SparseCsr {
    let mut values = a.values().to_vec();
    for i in 0..a.n_rows() {
        let (cols, _) = a.row(i);
        if let Ok(k) = cols.binary_search(&i) {
            values[a.row_ptr()[i] + k] += shift;
        }
    }
    SparseCsr::from_raw_unchecked(
        a.n_rows(),
        a.n_cols(),
        a.row_ptr().to_vec(),
        a.col_idx().to_vec(),
        values,
    )
}

/// Incomplete elimination restricted to the given fill pattern, row by row
/// with pivots in ascending column order: `w_p = w_p / U_pp`, then
/// `w_j -= w_p * U_pj` for every pattern position j > p of pivot row p.
pub fn ilu_factorize(a: &SparseCsr, fills: &FillLevels) -> Result<IluFactors> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    if fills.n_rows() != a.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "ilu_factorize",
            expected: a.n_rows(),
            actual: fills.n_rows(),
        });
    }
    let n = a.n_rows();
    let row_ptr = fills.row_ptr().to_vec();
    let col_idx = fills.col_idx().to_vec();
    let diag_pos: Vec<usize> = (0..n).map(|i| row_ptr[i] + fills.diag_pos()[i]).collect();
    let mut values = vec![0.0f64; col_idx.len()];

    // scatter positions of the current row, usize::MAX when absent
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);

        // load row i of A into the pattern (fill positions stay zero)
        for k in start..end {
            pos[col_idx[k]] = k;
        }
        {
            let (acols, avals) = a.row(i);
            for (&j, &v) in acols.iter().zip(avals) {
                let k = pos[j];
                if k == usize::MAX {
                    for k in start..end {
                        pos[col_idx[k]] = usize::MAX;
                    }
                    return Err(Error::Format(format!(
                        "fill pattern is missing matrix entry ({i}, {j})"
                    )));
                }
                values[k] = v;
            }
        }

        // eliminate: pattern entries left of the diagonal, ascending
        for kp in start..diag_pos[i] {
            let p = col_idx[kp];
            let upp = values[diag_pos[p]];
            let lip = values[kp] / upp;
            values[kp] = lip;
            for ku in (diag_pos[p] + 1)..row_ptr[p + 1] {
                let j = col_idx[ku];
                let kj = pos[j];
                if kj != usize::MAX {
                    values[kj] -= lip * values[ku];
                }
            }
        }

        for k in start..end {
            pos[col_idx[k]] = usize::MAX;
        }

        if values[diag_pos[i]].abs() < PIVOT_FLOOR {
            return Err(Error::ZeroPivot { row: i });
        }
    }

    let rel_diag: Vec<usize> = (0..n).map(|i| diag_pos[i] - row_ptr[i]).collect();
    let lower_schedule = LevelSchedule::from_deps(n, false, |i| {
        col_idx[row_ptr[i]..row_ptr[i] + rel_diag[i]].iter()
    });
    let upper_schedule = LevelSchedule::from_deps(n, true, |i| {
        col_idx[row_ptr[i] + rel_diag[i] + 1..row_ptr[i + 1]].iter()
    });

    let combined = SparseCsr::from_raw_unchecked(n, n, row_ptr, col_idx, values);
    Ok(IluFactors {
        combined,
        diag_pos,
        lower_schedule,
        upper_schedule,
    })
}

impl IluFactors {
    pub fn n_rows(&self) -> usize {
        self.combined.n_rows()
    }

    /// The combined L\U storage (debug and dump use).
    pub fn combined(&self) -> &SparseCsr {
        &self.combined
    }

    pub fn lower_schedule(&self) -> &LevelSchedule {
        &self.lower_schedule
    }

    pub fn upper_schedule(&self) -> &LevelSchedule {
        &self.upper_schedule
    }

    /// The unit-lower factor L as its own matrix.
    pub fn lower_csr(&self) -> SparseCsr {
        let n = self.n_rows();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let start = self.combined.row_ptr()[i];
            for k in start..self.diag_pos[i] {
                col_idx.push(self.combined.col_idx()[k]);
                values.push(self.combined.values()[k]);
            }
            col_idx.push(i);
            values.push(1.0);
            row_ptr[i + 1] = col_idx.len();
        }
        SparseCsr::from_raw_unchecked(n, n, row_ptr, col_idx, values)
    }

    /// The upper factor U (diagonal included) as its own matrix.
    pub fn upper_csr(&self) -> SparseCsr {
        let n = self.n_rows();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let end = self.combined.row_ptr()[i + 1];
            for k in self.diag_pos[i]..end {
                col_idx.push(self.combined.col_idx()[k]);
                values.push(self.combined.values()[k]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        SparseCsr::from_raw_unchecked(n, n, row_ptr, col_idx, values)
    }

    /// Solves `L U x = b` by a level-scheduled forward sweep followed by a
    /// level-scheduled backward sweep. Each row accumulates its terms in
    /// ascending column order, so the result is bitwise identical to plain
    /// sequential substitution at any worker count.
    pub fn solve(&self, b: &[f64], exec: Exec) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.solve_into(b, &mut x, exec);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64], exec: Exec) {
        let n = self.n_rows();
        assert_eq!(b.len(), n, "trisolve: b length");
        assert_eq!(x.len(), n, "trisolve: x length");
        let row_ptr = self.combined.row_ptr();
        let col_idx = self.combined.col_idx();
        let values = self.combined.values();

        // forward: (I + L) y = b
        for t in 0..self.lower_schedule.n_levels() {
            let rows = self.lower_schedule.level_rows(t);
            let compute = |i: usize, xs: &[f64]| -> f64 {
                let mut acc = b[i];
                for k in row_ptr[i]..self.diag_pos[i] {
                    acc -= values[k] * xs[col_idx[k]];
                }
                acc
            };
            exec::scatter_rows(rows, compute, x, exec);
        }

        // backward: U x = y
        for t in 0..self.upper_schedule.n_levels() {
            let rows = self.upper_schedule.level_rows(t);
            let compute = |i: usize, xs: &[f64]| -> f64 {
                let mut acc = xs[i];
                for k in (self.diag_pos[i] + 1)..row_ptr[i + 1] {
                    acc -= values[k] * xs[col_idx[k]];
                }
                acc / values[self.diag_pos[i]]
            };
            exec::scatter_rows(rows, compute, x, exec);
        }
    }
}

impl Preconditioner for IluFactors {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        self.solve_into(r, z, exec);
    }
}
