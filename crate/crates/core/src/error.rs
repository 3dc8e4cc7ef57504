use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0} has no data rows")]
    EmptyTable(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("bit width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("malformed index file {file}: {reason}")]
    Format { file: String, reason: String },

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error("incompatible configuration: {0}")]
    Compatibility(String),

    #[error("oracle budget exceeded: {needed} > {budget}")]
    Budget { needed: u128, budget: u128 },

    #[error("consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(file: &str, reason: impl Into<String>) -> Self {
        Error::Format {
            file: file.to_string(),
            reason: reason.into(),
        }
    }
}
