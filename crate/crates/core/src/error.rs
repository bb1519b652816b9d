use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("expected {expected} actions (one per MAP), got {got}")]
    ActionCount { expected: usize, got: usize },

    #[error("non-finite loss in run {run}: {detail}")]
    NonFiniteLoss { run: usize, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint does not match the model: {0}")]
    ShapeMismatch(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
