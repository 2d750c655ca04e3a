//! Prolongation operators: direct and standard classical interpolation.
//!
//! Coarse rows get identity rows. A fine row i interpolates from its
//! strong coarse influencers, with weights scaled so the full row sum is
//! accounted for: `w_ik = -(sum_j a_ij / sum_{k in C_i} a_ik) * a_ik / a_ii`.
//! Standard interpolation first eliminates strong fine influencers by
//! substituting their own equations, then applies the same formula on the
//! modified row with the interpolation set extended through those
//! neighbors' strong coarse points. Both preserve constants on
//! zero-row-sum inputs.

use crate::amg::coarsen::CfSplitting;
use crate::amg::strength::StrengthGraph;
use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// Direct interpolation (weights from strong coarse couplings only).
pub fn interp_direct(
    a: &SparseCsr,
    cf: &CfSplitting,
    s: &StrengthGraph,
) -> Result<SparseCsr> {
    build_prolongation(a, cf, s, false)
}

/// Standard interpolation (strong fine-fine couplings distributed through
/// the neighbors' coarse points).
pub fn interp_standard(
    a: &SparseCsr,
    cf: &CfSplitting,
    s: &StrengthGraph,
) -> Result<SparseCsr> {
    build_prolongation(a, cf, s, true)
}

fn build_prolongation(
    a: &SparseCsr,
    cf: &CfSplitting,
    s: &StrengthGraph,
    standard: bool,
) -> Result<SparseCsr> {
    let n = a.n_rows();
    let nc = cf.n_coarse();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();

    // scratch accumulator for the (possibly modified) row
    let mut acc = vec![0.0f64; n];
    let mut in_row = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut weights: Vec<(usize, f64)> = Vec::new();

    for i in 0..n {
        if cf.is_coarse(i) {
            col_idx.push(cf.coarse_index(i));
            values.push(1.0);
            row_ptr.push(col_idx.len());
            continue;
        }

        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if !in_row[j] {
                in_row[j] = true;
                acc[j] = 0.0;
                touched.push(j);
            }
            acc[j] += v;
        }

        // interpolation set: strong coarse influencers, extended through
        // strong fine influencers when requested
        weights.clear();
        let in_set = |k: usize, weights: &mut Vec<(usize, f64)>| {
            if !weights.iter().any(|&(c, _)| c == k) {
                weights.push((k, 0.0));
            }
        };
        for &j in s.strong(i) {
            if cf.is_coarse(j) {
                in_set(j, &mut weights);
            }
        }
        if standard {
            for &j in s.strong(i) {
                if cf.is_coarse(j) {
                    continue;
                }
                // substitute e_j by its own equation
                let ajj = a.get(j, j).ok_or(Error::MissingDiagonal { row: j })?;
                if ajj == 0.0 {
                    return Err(Error::ZeroPivot { row: j });
                }
                let aij = a.get(i, j).unwrap_or(0.0);
                let coef = aij / ajj;
                let (jcols, jvals) = a.row(j);
                for (&l, &v) in jcols.iter().zip(jvals) {
                    if !in_row[l] {
                        in_row[l] = true;
                        acc[l] = 0.0;
                        touched.push(l);
                    }
                    acc[l] -= coef * v;
                }
                for &k in s.strong(j) {
                    if cf.is_coarse(k) {
                        in_set(k, &mut weights);
                    }
                }
            }
        }

        if weights.is_empty() {
            let reason = "no strong coarse influencer".to_string();
            return Err(Error::Interpolation { row: i, reason });
        }

        let diag = if in_row[i] { acc[i] } else { 0.0 };
        if diag == 0.0 {
            return Err(Error::ZeroPivot { row: i });
        }
        let mut full_sum = 0.0;
        for &j in &touched {
            if j != i {
                full_sum += acc[j];
            }
        }
        let mut set_sum = 0.0;
        for &(k, _) in weights.iter() {
            set_sum += acc[k];
        }
        if set_sum == 0.0 {
            let reason = "interpolatory couplings sum to zero".to_string();
            return Err(Error::Interpolation { row: i, reason });
        }
        let alpha = full_sum / set_sum;
        for (k, w) in weights.iter_mut() {
            *w = -alpha * acc[*k] / diag;
        }

        weights.sort_unstable_by_key(|&(k, _)| cf.coarse_index(k));
        for &(k, w) in weights.iter() {
            col_idx.push(cf.coarse_index(k));
            values.push(w);
        }
        row_ptr.push(col_idx.len());

        for &j in &touched {
            in_row[j] = false;
        }
        touched.clear();
    }

    Ok(SparseCsr::from_raw_unchecked(n, nc, row_ptr, col_idx, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::coarsen::rs_coarsen;
    use crate::amg::strength::strength;
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
    fn all_coarse_splitting_gives_identity() {
        let a = SparseCsr::identity(5);
        let s = strength(&a, 0.25).unwrap();
        let cf = rs_coarsen(&s);
        assert_eq!(cf.n_coarse(), 5);
        let p = interp_direct(&a, &cf, &s).unwrap();
        assert_eq!(p, SparseCsr::identity(5));
    }

    #[test]
    fn chain_fine_rows_interpolate_half_half() {
        let a = chain(9);
        let s = strength(&a, 0.25).unwrap();
        let cf = rs_coarsen(&s);
        let p = interp_direct(&a, &cf, &s).unwrap();
        for i in 0..9 {
            if cf.is_coarse(i) {
                continue;
            }
            let (cols, vals) = p.row(i);
            // interior fine rows sit between two coarse rows
            if i > 0 && i < 8 {
                assert_eq!(cols.len(), 2, "row {i}");
                assert!((vals[0] - 0.5).abs() < 1e-14);
                assert!((vals[1] - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_vector_preserved_on_zero_row_sum_input() {
        // periodic-like zero-row-sum M-matrix: interior of a big chain
        let n = 64;
        let mut t = Vec::new();
        for i in 0..n {
            let left = (i + n - 1) % n;
            let right = (i + 1) % n;
            t.push((i, i, 2.0));
            t.push((i, left, -1.0));
            t.push((i, right, -1.0));
        }
        let a = SparseCsr::from_triplets(n, n, &t).unwrap();
        let s = strength(&a, 0.25).unwrap();
        let cf = rs_coarsen(&s);
        for p in [
            interp_direct(&a, &cf, &s).unwrap(),
            interp_standard(&a, &cf, &s).unwrap(),
        ] {
            let ones_c = vec![1.0; cf.n_coarse()];
            let fine = p.spmv(&ones_c, Exec::serial()).unwrap();
            for v in fine {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coarse_rows_are_unit_and_fine_rows_nonempty() {
        let a = poisson3d(6, 6, 6).unwrap();
        let s = strength(&a, 0.25).unwrap();
        let cf = rs_coarsen(&s);
        for p in [
            interp_direct(&a, &cf, &s).unwrap(),
            interp_standard(&a, &cf, &s).unwrap(),
        ] {
            for i in 0..a.n_rows() {
                let (cols, vals) = p.row(i);
                if cf.is_coarse(i) {
                    assert_eq!(cols, &[cf.coarse_index(i)]);
                    assert_eq!(vals, &[1.0]);
                } else {
                    assert!(!cols.is_empty(), "fine row {i} has no interpolation");
                }
            }
        }
    }
}
