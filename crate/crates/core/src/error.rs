use thiserror::Error;

#[derive(Debug, Error)]
pub enum SqgError {
    #[error("invalid grid size {n}: {reason}")]
    InvalidGrid { n: usize, reason: &'static str },

    #[error("grid mismatch: expected n={expected}, got n={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite sample at index {index} ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("solver aborted at t={t} (step {step}): {reason}")]
    BlowUp { t: f64, step: u64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SqgError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> SqgError {
    SqgError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
