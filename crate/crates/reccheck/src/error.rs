//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by dataset loading, training, model calls and report handling.
#[derive(Debug, Error)]
pub enum RecError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A row in an input file failed to parse. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Structurally valid input that violates a data invariant.
    #[error("invalid data: {0}")]
    Data(String),

    /// Bad configuration or an unsatisfiable test spec.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("embedding error: {0}")]
    Embedding(String),

    /// Remote model transport or protocol failure.
    #[error("remote model error: {0}")]
    Remote(String),

    /// Report serialization, parsing or comparison failure.
    #[error("report error: {0}")]
    Report(String),
}

impl RecError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RecError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        RecError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RecError>;
