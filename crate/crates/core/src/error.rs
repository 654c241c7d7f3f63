use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (ragged rows, unparsable fields, empty file).
    #[error("format error: {0}")]
    Format(String),

    /// A value lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid argument passed by the caller.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical routine failed (e.g. covariance factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An invariant that should be unreachable was violated.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
