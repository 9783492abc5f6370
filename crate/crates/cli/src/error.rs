use thiserror::Error;

use i2bias_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const INVALID_INPUT: i32 = 2;
    pub const INSUFFICIENT_DATA: i32 = 3;
    pub const NUMERIC_FAILURE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidInput(String),

    #[error("{0}")]
    InsufficientData(String),

    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidInput(_) => exit::INVALID_INPUT,
            CliError::InsufficientData(_) => exit::INSUFFICIENT_DATA,
            CliError::Numeric(_) => exit::NUMERIC_FAILURE,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::InvalidInput(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(m) => CliError::InvalidInput(m),
            CoreError::InsufficientData(m) => CliError::InsufficientData(m),
            CoreError::Convergence(m) => CliError::Numeric(m),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
