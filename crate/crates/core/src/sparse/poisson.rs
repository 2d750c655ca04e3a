//! Test-problem generator: 7-point finite-difference Laplacian.

use crate::error::{Error, Result};
use crate::sparse::csr::SparseCsr;

/// 7-point stencil discretization of the Poisson equation on an
/// `nx` x `ny` x `nz` grid with Dirichlet truncation at the boundary:
/// constant diagonal 6, off-diagonal -1 per interior neighbor. The result
/// is symmetric positive definite with `nx*ny*nz` rows and
/// `7n - 2(ny*nz + nx*nz + nx*ny)` stored entries.
pub fn poisson3d(nx: usize, ny: usize, nz: usize) -> Result<SparseCsr> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::Format(format!(
            "poisson3d: grid dimensions must be positive (got {nx}x{ny}x{nz})"
        )));
    }
    let n = nx * ny * nz;
    let nnz = 7 * n - 2 * (ny * nz + nx * nz + nx * ny);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);

    let plane = nx * ny;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if z > 0 {
                    col_idx.push(i - plane);
                    values.push(-1.0);
                }
                if y > 0 {
                    col_idx.push(i - nx);
                    values.push(-1.0);
                }
                if x > 0 {
                    col_idx.push(i - 1);
                    values.push(-1.0);
                }
                col_idx.push(i);
                values.push(6.0);
                if x + 1 < nx {
                    col_idx.push(i + 1);
                    values.push(-1.0);
                }
                if y + 1 < ny {
                    col_idx.push(i + nx);
                    values.push(-1.0);
                }
                if z + 1 < nz {
                    col_idx.push(i + plane);
                    values.push(-1.0);
                }
                row_ptr.push(col_idx.len());
            }
        }
    }
    debug_assert_eq!(col_idx.len(), nnz);
    Ok(SparseCsr::from_raw_unchecked(n, n, row_ptr, col_idx, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_is_scalar_six() {
        let a = poisson3d(1, 1, 1).unwrap();
        assert_eq!(a.n_rows(), 1);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), Some(6.0));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(poisson3d(0, 4, 4).is_err());
        assert!(poisson3d(4, 0, 4).is_err());
        assert!(poisson3d(4, 4, 0).is_err());
    }

    #[test]
    fn nnz_formula_holds_for_random_shapes() {
        let shapes = [
            (1, 1, 1),
            (2, 3, 4),
            (5, 1, 7),
            (3, 3, 3),
            (10, 2, 1),
            (4, 7, 6),
            (1, 9, 2),
            (6, 6, 6),
            (8, 3, 5),
            (2, 2, 9),
        ];
        for (nx, ny, nz) in shapes {
            let a = poisson3d(nx, ny, nz).unwrap();
            let n = nx * ny * nz;
            assert_eq!(a.n_rows(), n);
            assert_eq!(a.nnz(), 7 * n - 2 * (ny * nz + nx * nz + nx * ny));
        }
    }

    #[test]
    fn small_grid_is_symmetric_with_constant_diagonal() {
        let a = poisson3d(3, 4, 2).unwrap();
        assert!(a.is_symmetric(0.0));
        for i in 0..a.n_rows() {
            assert_eq!(a.get(i, i), Some(6.0));
        }
    }
}
