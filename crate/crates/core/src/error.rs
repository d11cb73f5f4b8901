use thiserror::Error;

/// Errors raised by state builders, optical transformations and detectors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed something the operation cannot accept (unknown mode,
    /// mismatched mode sets, empty projection subset, out-of-range parameter).
    #[error("usage error: {0}")]
    Usage(String),
    /// An input failed a numerical validity check (non-unitary matrix,
    /// unnormalized state, inconsistent evaluation paths).
    #[error("validation error: {0}")]
    Validation(String),
    /// The request is well-formed but exceeds a configured limit
    /// (truncation tail bound, expansion budget, exact-integer range).
    #[error("configuration error: {0}")]
    Config(String),
    /// The quantity is mathematically undefined for this input.
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
