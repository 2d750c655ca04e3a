use thiserror::Error;

/// Errors produced by matrix construction, factorization and solver setup.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid sparse format: {0}")]
    Format(String),

    #[error("matrix must be square ({n_rows}x{n_cols})")]
    NotSquare { n_rows: usize, n_cols: usize },

    #[error("row {row} has no diagonal entry")]
    MissingDiagonal { row: usize },

    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },

    #[error("matrix is not {orientation} triangular (entry at ({row}, {col}))")]
    NotTriangular {
        orientation: &'static str,
        row: usize,
        col: usize,
    },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("interpolation failure at fine row {row}: {reason}")]
    Interpolation { row: usize, reason: String },

    #[error("coarsest-level matrix is singular")]
    SingularCoarseSolve,

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
