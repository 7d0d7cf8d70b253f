//! CLI error type with the process exit-code mapping: 0 success, 2 usage or
//! config error, 3 numeric failure.

use acr_core::AcrError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Numeric(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl From<AcrError> for CliError {
    fn from(e: AcrError) -> Self {
        match e {
            AcrError::Diverged { .. } => Self::Numeric(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("io error: {e}"))
    }
}
