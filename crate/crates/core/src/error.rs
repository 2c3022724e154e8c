//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A network, schedule, or run was configured with incompatible values.
    #[error("configuration error: {0}")]
    Config(String),

    /// A call violated an API contract (stale cache, mismatched shapes, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A dialogue act fell outside the fixed intent/slot schema.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A loss or gradient stopped being a finite number.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An operation that needs data was handed an empty input.
    #[error("empty input: {0}")]
    Empty(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
