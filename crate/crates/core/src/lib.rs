//! Sparse iterative linear-solver toolkit.
//!
//! The pieces, bottom to top:
//!
//! - [`sparse`]: CSR and hybrid ELL+CSR (HEC) storage, SpMV, vector
//!   kernels, a 7-point Poisson generator, and Matrix Market I/O.
//! - [`partition`]: row partitioning with a diagonal-concentrating
//!   ordering, staged halo exchange for partitioned SpMV, and overlapping
//!   block extraction.
//! - [`ilu`]: ILU(k) factorization, level-scheduled parallel triangular
//!   solves, and restricted additive Schwarz preconditioning.
//! - [`krylov`]: BiCGSTAB, restarted GMRES, and CG over any
//!   [`op::LinearOperator`] and [`op::Preconditioner`].
//! - [`amg`]: classical algebraic multigrid (RS and CLJP coarsening,
//!   direct and standard interpolation, four smoothers, V-cycles), usable
//!   standalone or as a preconditioner.
//!
//! Every kernel takes an [`exec::Exec`] worker context, and all results
//! are bitwise reproducible for a fixed worker count.

// index-form loops keep the sparse kernels close to their math
#![allow(clippy::needless_range_loop)]

pub mod amg;
pub mod error;
pub mod exec;
pub mod ilu;
pub mod krylov;
pub mod op;
pub mod partition;
pub mod sparse;

pub use error::{Error, Result};
pub use exec::Exec;
pub use op::{Identity, LinearOperator, Preconditioner};
pub use sparse::{HecMatrix, SparseCsr};
