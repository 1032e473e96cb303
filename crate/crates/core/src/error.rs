use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("real codebook requires a zero diagonal, row {0} has P[{0}][{0}] = 1")]
    NonZeroDiagonal(usize),

    #[error("check digit is set")]
    CheckDigitSet,

    #[error("invalid geometry: {0}")]
    InvalidConfig(String),

    #[error("residual is identically zero")]
    DegenerateResidual,

    #[error("column is numerically dependent on the current fit")]
    DependentColumn,

    #[error("K = 0 transmitted messages")]
    NoMessages,

    #[error("requested {requested} indices from a codebook of {available}")]
    TooManyIndices { requested: usize, available: usize },

    #[error("no root bracketed: {0}")]
    NoRoot(String),

    #[error("fixed-point iteration did not converge after {0} iterations")]
    NoConvergence(usize),
}
