use thiserror::Error;

use crate::lp::Status;

/// Errors raised by the barycenter library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid transport plan: {0}")]
    InvalidPlan(String),

    #[error("candidate support set is empty")]
    EmptySupport,

    #[error("instance too large for exact support enumeration: {size} support combinations exceed the cap of {cap}")]
    TooLarge { size: u128, cap: u128 },

    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("linear program solve ended with status {0:?}")]
    Solver(Status),

    #[error("oracle limit exceeded: {0}")]
    OracleLimit(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid image: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
