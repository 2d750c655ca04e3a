//! Sparse matrix storage (CSR, HEC), format conversion, matrix-vector
//! products, vector kernels, the Poisson test-problem generator, and
//! Matrix Market I/O.

pub mod csr;
pub mod hec;
pub mod kernels;
pub mod mm;
pub mod poisson;

pub use csr::SparseCsr;
pub use hec::{HecMatrix, DEFAULT_ELL_WIDTH_CAP, DEFAULT_STRIDE_UNIT};
pub use kernels::{axpby_inplace, axpbyz, dot, find_non_finite, norm2};
pub use mm::{read_matrix_market, read_matrix_market_from, write_matrix_market, write_matrix_market_to};
pub use poisson::poisson3d;
