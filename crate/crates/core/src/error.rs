use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or inconsistent input data (epoch files, manifests, labels).
    #[error("{path}: {reason}")]
    Data { path: PathBuf, reason: String },

    /// A configuration value is out of range or malformed.
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// Input violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn input(reason: impl Into<String>) -> Self {
        Error::Input(reason.into())
    }

    /// Process exit code used by the CLI: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            Error::Io { .. } | Error::Data { .. } | Error::Input(_) => 2,
            Error::Numeric(_) => 3,
        }
    }
}
