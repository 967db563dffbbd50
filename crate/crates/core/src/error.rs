use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("expression error at position {position}: {message}")]
    Expression { position: usize, message: String },

    #[error("point {point:?} is outside the evaluable region")]
    OutOfDomain { point: Vec<f64> },

    #[error("slice index {index} out of range (0..={max})")]
    SliceOutOfRange { index: usize, max: usize },

    #[error("time {0} is not on the solver's time lattice")]
    OffLattice(f64),

    #[error("non-finite value at slice {slice}, node {node}")]
    NonFinite { slice: usize, node: usize },

    #[error("empty direction set")]
    EmptyDirections,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
