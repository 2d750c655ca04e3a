//! Dependency levels for parallel triangular solves.
//!
//! Row i of a lower triangular system can be solved once every j < i with
//! L_ij != 0 is known, so rows group into levels `l(i) = 1 + max l(j)` over
//! the dependencies. All rows of a level are independent and solve
//! concurrently; levels run in order.

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// Which triangle a matrix is expected to occupy.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TriangularSide {
    Lower,
    Upper,
}

/// Rows grouped by dependency level. `rows[level_ptr[t]..level_ptr[t+1]]`
/// lists the rows of level t in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSchedule {
    level_ptr: Vec<usize>,
    rows: Vec<usize>,
}

impl LevelSchedule {
    pub fn n_levels(&self) -> usize {
        self.level_ptr.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn level_ptr(&self) -> &[usize] {
        &self.level_ptr
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn level_rows(&self, t: usize) -> &[usize] {
        &self.rows[self.level_ptr[t]..self.level_ptr[t + 1]]
    }

    /// Builds a schedule from a dependency closure: `deps(i)` yields the
    /// rows that must precede row i.
    pub(crate) fn from_deps<'a, F, I>(n: usize, reverse: bool, deps: F) -> LevelSchedule
    where
        F: Fn(usize) -> I,
        I: IntoIterator<Item = &'a usize>,
    {
        let mut level = vec![0usize; n];
        let mut max_level = 0usize;
        let index_order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for i in index_order {
            let mut l = 0usize;
            for &j in deps(i) {
                l = l.max(level[j]);
            }
            level[i] = l + 1;
            max_level = max_level.max(l + 1);
        }
        if n == 0 {
            return LevelSchedule {
                level_ptr: vec![0],
                rows: Vec::new(),
            };
        }
        let mut counts = vec![0usize; max_level + 1];
        for &l in &level {
            counts[l] += 1;
        }
        let mut level_ptr = Vec::with_capacity(max_level + 1);
        level_ptr.push(0);
        let mut at = 0;
        for t in 1..=max_level {
            at += counts[t];
            level_ptr.push(at);
        }
        let mut next = level_ptr.clone();
        let mut rows = vec![0usize; n];
        // ascending row scan keeps rows sorted within each level
        for (i, &l) in level.iter().enumerate() {
            rows[next[l - 1]] = i;
            next[l - 1] += 1;
        }
        LevelSchedule { level_ptr, rows }
    }
}

/// Builds the level schedule of a triangular matrix. Diagonal entries do
/// not count as dependencies; an entry on the wrong side of the diagonal
/// is an error.
pub fn build_level_schedule(tri: &SparseCsr, side: TriangularSide) -> Result<LevelSchedule> {
    if !tri.is_square() {
        return Err(Error::NotSquare {
            n_rows: tri.n_rows(),
            n_cols: tri.n_cols(),
        });
    }
    let n = tri.n_rows();
    for i in 0..n {
        let (cols, _) = tri.row(i);
        for &j in cols {
            let bad = match side {
                TriangularSide::Lower => j > i,
                TriangularSide::Upper => j < i,
            };
            if bad {
                return Err(Error::NotTriangular {
                    orientation: match side {
                        TriangularSide::Lower => "lower",
                        TriangularSide::Upper => "upper",
                    },
                    row: i,
                    col: j,
                });
            }
        }
    }
    let schedule = match side {
        TriangularSide::Lower => LevelSchedule::from_deps(n, false, |i| {
            let (cols, _) = tri.row(i);
            let end = cols.partition_point(|&j| j < i);
            cols[..end].iter()
        }),
        TriangularSide::Upper => LevelSchedule::from_deps(n, true, |i| {
            let (cols, _) = tri.row(i);
            let start = cols.partition_point(|&j| j <= i);
            cols[start..].iter()
        }),
    };
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_one_level() {
        let a = SparseCsr::identity(7);
        let s = build_level_schedule(&a, TriangularSide::Lower).unwrap();
        assert_eq!(s.n_levels(), 1);
        assert_eq!(s.level_rows(0), &[0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn bidiagonal_chain_has_one_row_per_level() {
        let n = 9;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
        }
        let a = SparseCsr::from_triplets(n, n, &t).unwrap();
        let s = build_level_schedule(&a, TriangularSide::Lower).unwrap();
        assert_eq!(s.n_levels(), n);
        for t in 0..n {
            assert_eq!(s.level_rows(t), &[t]);
        }
    }

    #[test]
    fn upper_schedule_mirrors_lower() {
        let n = 9;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        let a = SparseCsr::from_triplets(n, n, &t).unwrap();
        let s = build_level_schedule(&a, TriangularSide::Upper).unwrap();
        assert_eq!(s.n_levels(), n);
        assert_eq!(s.level_rows(0), &[n - 1]);
        assert_eq!(s.level_rows(n - 1), &[0]);
    }

    #[test]
    fn dependencies_always_land_in_earlier_levels() {
        // L factor pattern of a small grid matrix
        let a = crate::sparse::poisson::poisson3d(4, 4, 4).unwrap();
        let f = crate::ilu::ilu_symbolic(&a, 1).unwrap();
        let factors = crate::ilu::ilu_factorize(&a, &f).unwrap();
        let s = factors.lower_schedule();
        let mut level_of = vec![0usize; a.n_rows()];
        for t in 0..s.n_levels() {
            for &i in s.level_rows(t) {
                level_of[i] = t;
            }
        }
        let combined = factors.combined();
        for i in 0..a.n_rows() {
            let (cols, _) = combined.row(i);
            for &j in cols.iter().filter(|&&j| j < i) {
                assert!(level_of[j] < level_of[i]);
            }
        }
    }

    #[test]
    fn non_triangular_input_rejected() {
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(build_level_schedule(&a, TriangularSide::Lower).is_err());
        assert!(build_level_schedule(&a, TriangularSide::Upper).is_ok());
    }
}
