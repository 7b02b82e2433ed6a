use opspace::OpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("no input: {0}")]
    Empty(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Shape(_) => 3,
            CliError::UnknownSuite(_) => 4,
            CliError::Empty(_) => 5,
        }
    }
}

impl From<OpError> for CliError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::Parse(m) => CliError::Parse(m),
            OpError::Shape(m) | OpError::InvalidInput(m) | OpError::Unsupported(m) => CliError::Shape(m),
        }
    }
}
