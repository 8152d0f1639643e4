use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by every stage of the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates an operation precondition.
    #[error("rejected input: {0}")]
    InvalidInput(String),
    /// Input is well-formed but the quantity is undefined for it
    /// (constant vectors, all-zero differences, zero chronic load).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A randomized generator exhausted its attempt budget.
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// Config validation found several problems; all are listed.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    ConfigList(Vec<String>),
    #[error("dataset missing: expected {path}: {hint}")]
    DatasetMissing { path: PathBuf, hint: String },
    #[error("backend error: {0}")]
    Backend(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
    #[error("png decoding: {0}")]
    PngDecode(#[from] png::DecodingError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
