use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum DetError {
    /// An argument fell outside the domain of a function (e.g. `x` outside `[lo, hi]`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension out of range: {index} (tree has {dims} dimensions)")]
    DimensionOutOfRange { index: usize, dims: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("condition has zero estimated density")]
    ZeroDensity,

    #[error("tree has no leaf with positive mass")]
    EmptyTree,

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("tree document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DetError> = std::result::Result<T, E>;
