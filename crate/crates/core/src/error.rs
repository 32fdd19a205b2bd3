use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation precondition (length mismatch, missing label, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The metric is not defined for the given input, e.g. SI-SDR against a silent reference.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Input data does not match what the pipeline expects.
    #[error("data error: {0}")]
    Data(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code for the CLI: 2 configuration, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. }
            | Error::Format { .. }
            | Error::Contract(_)
            | Error::UndefinedMetric(_)
            | Error::Data(_) => 3,
            Error::Internal(_) => 4,
        }
    }
}
