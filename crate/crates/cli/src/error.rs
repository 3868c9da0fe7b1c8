//! CLI-side error type carrying the process exit-code contract.

use std::io;

/// Exit codes: 0 success, 2 config error, 3 data/format error, 4 numeric
/// failure, 5 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Format(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        CliError::Format(msg.into())
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<tct_core::Error> for CliError {
    fn from(err: tct_core::Error) -> Self {
        match err {
            tct_core::Error::InvalidArgument(m) => CliError::Config(m),
            tct_core::Error::InvalidData(m) => CliError::Data(m),
            tct_core::Error::Numeric(m) => CliError::Numeric(m),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Format(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        assert_eq!(CliError::data("x").exit_code(), 3);
        assert_eq!(CliError::format("x").exit_code(), 3);
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 4);
        let io: CliError = std::io::Error::other("x").into();
        assert_eq!(io.exit_code(), 5);
    }

    #[test]
    fn core_error_classes_map_onto_exit_codes() {
        assert_eq!(CliError::from(tct_core::Error::arg("a")).exit_code(), 2);
        assert_eq!(CliError::from(tct_core::Error::data("d")).exit_code(), 3);
        assert_eq!(CliError::from(tct_core::Error::numeric("n")).exit_code(), 4);
    }
}
