use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data; carries the source name and 1-based line where known.
    #[error("{source_name}:{line}: {message}")]
    Data {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("time {0} lies outside the observation window")]
    OutsideWindow(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(source_name: impl Into<String>, line: u64, msg: impl Into<String>) -> Self {
        Error::Data {
            source_name: source_name.into(),
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A parameter vector that falls outside the model's support.
///
/// Not an error for the sampler: it maps to a log-density of `-inf`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter draw rejected: {0}")]
pub struct Rejection(pub String);
