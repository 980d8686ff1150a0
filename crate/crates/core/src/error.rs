use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the co-segmentation pipeline.
#[derive(Debug, Error)]
pub enum CosegError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl CosegError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CosegError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CosegError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CosegError>;
