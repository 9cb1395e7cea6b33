use thiserror::Error;

/// Errors raised across the sampling library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain state: {0}")]
    InvalidState(String),

    /// The sample cannot be produced by the block being inverted. Callers
    /// treat this as a rejected jump, not a hard failure.
    #[error("not invertible: {0}")]
    NonInvertible(String),

    #[error("degenerate interval [{0}, {1})")]
    DegenerateInterval(f64, f64),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
