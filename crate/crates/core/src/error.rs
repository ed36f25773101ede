use thiserror::Error;

/// Errors raised by the library.
///
/// `Contract` covers precondition violations of the pure operations
/// (mismatched dimensions, negative ranges, extrapolating into the past).
/// `Config` is reserved for malformed scenarios and is always raised before
/// any simulation event fires.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("attribute dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no hop count up to {cap} reaches the expected range population")]
    Disconnected { cap: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
