//! Error type shared by all core modules.

use alloc::string::String;

/// Failure classes mirror the tool's exit-code contract: bad arguments or
/// configuration, malformed data, and numeric breakdown.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;

/// Finite and strictly positive (rejects NaN and infinities).
pub(crate) fn is_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Finite and nonnegative (rejects NaN and infinities).
pub(crate) fn is_nonnegative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}
