use thiserror::Error;

/// Errors produced by the gaze estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pitch {0} rad is outside the open interval (-pi/2, pi/2)")]
    PitchOutOfRange(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
