use thiserror::Error;

/// Errors produced by the trace, estimator, simulation and detection layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("line {line}: cannot parse: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification of [`Error`], used to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Io,
    Parse,
    Argument,
    Data,
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        match self {
            Error::Io(_) => ErrorFamily::Io,
            Error::Parse { .. } | Error::Validation { .. } => ErrorFamily::Parse,
            Error::InvalidArgument(_) | Error::Config { .. } => ErrorFamily::Argument,
            Error::EmptyInput(_) | Error::Degenerate(_) | Error::InsufficientData(_) => {
                ErrorFamily::Data
            }
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
