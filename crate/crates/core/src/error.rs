use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum StegoError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "insufficient capacity: found {found} of {requested} unique positions after {steps} steps"
    )]
    InsufficientCapacity {
        found: usize,
        requested: usize,
        steps: u64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("index out of range: row {row}, column {col}")]
    Index { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("extract error: {0}")]
    Extract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, StegoError>;
