use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("projector set is not complete: {0}")]
    IncompleteProjectors(String),

    #[error("key alignment error: {0}")]
    Alignment(String),

    #[error("empty key")]
    EmptyKey,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
