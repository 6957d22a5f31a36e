//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of lab operations.
#[derive(Debug, Error)]
pub enum LabError {
    /// Grid parameters outside the supported range.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    /// Two objects live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A parameter violates a precondition of the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An input matrix fails a structural check (Hermitian, bounded, ...).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    /// A solver failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Configuration file or CLI input is malformed.
    #[error("configuration error: {0}")]
    Config(String),
    /// File system or serialization failure.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

/// Result alias with [`LabError`].
pub type Result<T> = std::result::Result<T, LabError>;
