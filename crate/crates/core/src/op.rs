//! Operator abstractions shared by the solvers.

use crate::exec::Exec;
use crate::partition::PartitionedMatrix;
use crate::sparse::{HecMatrix, SparseCsr};

/// Anything that can act as the system matrix of an iterative solve.
pub trait LinearOperator: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;

    /// `y = A x`. Dimensions are the caller's contract; implementations
    /// assert them.
    fn apply_into(&self, x: &[f64], y: &mut [f64], exec: Exec);

    /// Staged exchange volume of one application (0 for unpartitioned
    /// operators).
    fn comm_volume_per_apply(&self) -> usize {
        0
    }
}

impl LinearOperator for SparseCsr {
    fn n_rows(&self) -> usize {
        self.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.n_cols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        self.spmv_into(x, y, exec);
    }
}

impl LinearOperator for HecMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.n_cols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        self.spmv_into(x, y, exec);
    }
}

impl LinearOperator for PartitionedMatrix {
    fn n_rows(&self) -> usize {
        self.n_rows()
    }

    fn n_cols(&self) -> usize {
        self.n_cols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        self.spmv_into(x, y, exec);
    }

    fn comm_volume_per_apply(&self) -> usize {
        self.comm_volume_per_apply()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn n_rows(&self) -> usize {
        (**self).n_rows()
    }

    fn n_cols(&self) -> usize {
        (**self).n_cols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64], exec: Exec) {
        (**self).apply_into(x, y, exec)
    }

    fn comm_volume_per_apply(&self) -> usize {
        (**self).comm_volume_per_apply()
    }
}

/// Approximate inverse application `z = M^{-1} r`. A preconditioner must
/// act as a fixed linear operator for the duration of one solve.
pub trait Preconditioner: Sync {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec);
}

/// The do-nothing preconditioner (`M = I`).
pub struct Identity;

impl Preconditioner for Identity {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        let _ = exec;
        z.copy_from_slice(r);
    }
}

impl<T: Preconditioner + ?Sized> Preconditioner for &T {
    fn apply_to(&self, r: &[f64], z: &mut [f64], exec: Exec) {
        (**self).apply_to(r, z, exec)
    }
}
