//! Symbolic ILU(k): fill-level computation.
//!
//! Every position of the input pattern starts at level 0 (absent positions
//! are treated as unbounded). Eliminating pivot p updates the level of
//! (i, j) to `min(L_ij, L_ip + L_pj + 1)`, and positions whose final level
//! exceeds k are dropped when the row completes. A candidate above k can
//! only shrink through the min-update, and only retained (level <= k)
//! entries ever act as pivots or propagate to later rows, so candidates
//! above k never need to be materialized at all.

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// ILU(k) fill pattern with the level of every retained position.
#[derive(Clone, Debug)]
pub struct FillLevels {
    n: usize,
    fill_k: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    level: Vec<u32>,
    diag_pos: Vec<usize>,
}

impl FillLevels {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn fill_k(&self) -> usize {
        self.fill_k
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn levels(&self) -> &[u32] {
        &self.level
    }

    /// Position of the diagonal inside each row's entry range.
    pub fn diag_pos(&self) -> &[usize] {
        &self.diag_pos
    }

    /// Columns and levels of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[u32]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.level[s..e])
    }

    /// True if the retained pattern equals the pattern of `a` exactly.
    pub fn pattern_equals(&self, a: &SparseCsr) -> bool {
        self.row_ptr == a.row_ptr() && self.col_idx == a.col_idx()
    }

    /// True if every position of `self` also appears in `other`.
    pub fn pattern_subset_of(&self, other: &FillLevels) -> bool {
        if self.n != other.n {
            return false;
        }
        for i in 0..self.n {
            let (mine, _) = self.row(i);
            let (theirs, _) = other.row(i);
            let mut t = 0;
            for &j in mine {
                while t < theirs.len() && theirs[t] < j {
                    t += 1;
                }
                if t == theirs.len() || theirs[t] != j {
                    return false;
                }
            }
        }
        true
    }
}

/// Computes the exact level-k fill pattern of `a` (square, structurally
/// nonzero diagonal required).
pub fn ilu_symbolic(a: &SparseCsr, k: usize) -> Result<FillLevels> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            n_rows: a.n_rows(),
            n_cols: a.n_cols(),
        });
    }
    let n = a.n_rows();
    let k32 = u32::try_from(k).unwrap_or(u32::MAX);

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx: Vec<usize> = Vec::with_capacity(a.nnz());
    let mut level: Vec<u32> = Vec::with_capacity(a.nnz());
    let mut diag_pos = Vec::with_capacity(n);

    // working row as a sorted linked list over columns
    const NIL: usize = usize::MAX;
    let head = n; // sentinel slot
    let mut next = vec![NIL; n + 1];
    let mut lev = vec![0u32; n];

    for i in 0..n {
        // load pattern of row i
        let (cols, _) = a.row(i);
        if cols.binary_search(&i).is_err() {
            return Err(Error::MissingDiagonal { row: i });
        }
        next[head] = NIL;
        let mut tail = head;
        for &j in cols {
            next[tail] = j;
            next[j] = NIL;
            lev[j] = 0;
            tail = j;
        }

        // eliminate pivots in ascending column order; fill inserted by a
        // pivot lands strictly after it, so the traversal sees it
        let mut p = next[head];
        while p != NIL && p < i {
            if lev[p] <= k32 {
                let lip = lev[p];
                let (pcols, plevs) = (
                    &col_idx[row_ptr[p]..row_ptr[p + 1]],
                    &level[row_ptr[p]..row_ptr[p + 1]],
                );
                let dp = diag_pos[p];
                // merge the U-part of factor row p into the working row
                let mut cursor = p;
                for (idx, &j) in pcols.iter().enumerate().skip(dp + 1) {
                    let cand = lip + plevs[idx] + 1;
                    if cand > k32 {
                        continue;
                    }
                    while next[cursor] != NIL && next[cursor] < j {
                        cursor = next[cursor];
                    }
                    if next[cursor] == j {
                        let c = next[cursor];
                        if cand < lev[c] {
                            lev[c] = cand;
                        }
                    } else {
                        next[j] = next[cursor];
                        next[cursor] = j;
                        lev[j] = cand;
                    }
                    cursor = j;
                }
            }
            p = next[p];
        }

        // row complete: everything in the list has level <= k
        let row_start = col_idx.len();
        let mut j = next[head];
        while j != NIL {
            if j == i {
                diag_pos.push(col_idx.len() - row_start);
            }
            col_idx.push(j);
            level.push(lev[j]);
            j = next[j];
        }
        row_ptr.push(col_idx.len());
    }

    Ok(FillLevels {
        n,
        fill_k: k,
        row_ptr,
        col_idx,
        level,
        diag_pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseCsr {
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

    fn laplace2d(nx: usize, ny: usize) -> SparseCsr {
        let n = nx * ny;
        let mut t = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * y;
                t.push((i, i, 4.0));
                if x > 0 {
                    t.push((i, i - 1, -1.0));
                }
                if x + 1 < nx {
                    t.push((i, i + 1, -1.0));
                }
                if y > 0 {
                    t.push((i, i - nx, -1.0));
                }
                if y + 1 < ny {
                    t.push((i, i + nx, -1.0));
                }
            }
        }
        SparseCsr::from_triplets(n, n, &t).unwrap()
    }

    /// Dense level-propagation oracle following the elimination loop
    /// directly on an n x n level table.
    fn dense_fill_oracle(a: &SparseCsr, k: u32) -> Vec<Vec<Option<u32>>> {
        let n = a.n_rows();
        let inf = u32::MAX;
        let mut lev = vec![vec![inf; n]; n];
        for i in 0..n {
            let (cols, _) = a.row(i);
            for &j in cols {
                lev[i][j] = 0;
            }
        }
        for i in 1..n {
            for p in 0..i {
                if lev[i][p] > k {
                    continue;
                }
                for j in (p + 1)..n {
                    if lev[p][j] > k {
                        continue;
                    }
                    let cand = lev[i][p] + lev[p][j] + 1;
                    if cand < lev[i][j] {
                        lev[i][j] = cand;
                    }
                }
            }
            for j in 0..n {
                if lev[i][j] > k {
                    lev[i][j] = inf;
                }
            }
        }
        lev.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|l| if l == inf { None } else { Some(l) })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn k0_pattern_equals_input_pattern() {
        let a = laplace2d(6, 5);
        let f = ilu_symbolic(&a, 0).unwrap();
        assert!(f.pattern_equals(&a));
        assert!(f.levels().iter().all(|&l| l == 0));
    }

    #[test]
    fn tridiagonal_never_fills() {
        let a = tridiag(12);
        for k in 0..4 {
            let f = ilu_symbolic(&a, k).unwrap();
            assert!(f.pattern_equals(&a), "k={k}");
        }
    }

    #[test]
    fn five_point_grid_matches_dense_oracle() {
        let a = laplace2d(10, 10);
        for k in [1usize, 2] {
            let f = ilu_symbolic(&a, k).unwrap();
            let oracle = dense_fill_oracle(&a, k as u32);
            for i in 0..a.n_rows() {
                let (cols, levs) = f.row(i);
                let expected: Vec<(usize, u32)> = (0..a.n_rows())
                    .filter_map(|j| oracle[i][j].map(|l| (j, l)))
                    .collect();
                let got: Vec<(usize, u32)> =
                    cols.iter().copied().zip(levs.iter().copied()).collect();
                assert_eq!(got, expected, "row {i} at k={k}");
            }
        }
    }

    #[test]
    fn pattern_nesting_over_k() {
        let a = laplace2d(8, 8);
        let mut prev: Option<FillLevels> = None;
        for k in 0..4 {
            let f = ilu_symbolic(&a, k).unwrap();
            if let Some(p) = &prev {
                assert!(p.pattern_subset_of(&f), "k={k}");
            }
            prev = Some(f);
        }
    }

    #[test]
    fn missing_diagonal_rejected() {
        let a = SparseCsr::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(matches!(
            ilu_symbolic(&a, 0),
            Err(Error::MissingDiagonal { row: 1 })
        ));
    }
}
