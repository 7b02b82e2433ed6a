use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Numeric findings (a failed axiom, a map that is not a contraction) are
/// reported through verdicts and reports, never through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, OpError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(OpError::InvalidInput(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(OpError::Shape(msg.into()))
}

impl From<serde_json::Error> for OpError {
    fn from(e: serde_json::Error) -> Self {
        OpError::Parse(e.to_string())
    }
}
