//! Crate-wide error type.

/// Errors surfaced by the kernels, the trainer, and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum AcrError {
    /// An argument violated a precondition (non-finite value, empty vector,
    /// bad range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operand dimensions are inconsistent.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A configuration value or combination is unusable.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A ranking metric was asked for with only one outcome class present.
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    /// A structured text file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AcrError>;

impl AcrError {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    pub fn shape_mismatch(msg: impl Into<String>) -> Self {
        Self::ShapeMismatch(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Self::InvalidConfig(msg.into())
    }
}
