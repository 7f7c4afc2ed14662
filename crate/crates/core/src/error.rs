//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by signal-processing operations.
#[derive(Debug, Error)]
pub enum SimError {
    /// A precondition on an operation's input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// PAPR is undefined because the signal carries no energy.
    #[error("undefined PAPR: signal is all-zero")]
    ZeroSignal,
    /// A numerical procedure failed (non-finite values, singular division).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Model file I/O failed.
    #[error("model i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// A model file exists but does not match the documented format.
    #[error("malformed model file: {0}")]
    ModelFormat(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidInput(msg.into())
}
