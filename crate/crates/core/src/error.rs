//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by corpus handling, generation, training and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file could not be parsed; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    /// Data violates the label schema or a structural invariant.
    #[error("schema violation: {0}")]
    Schema(String),

    /// Data is well-formed but semantically invalid.
    #[error("invalid data: {0}")]
    Data(String),

    /// A template violates a pack invariant.
    #[error("template '{id}': {msg}")]
    Template { id: String, msg: String },

    /// Deduplicated generation could not reach the requested corpus size.
    #[error(
        "generation exhausted after {attempts} attempts: \
         only {achieved} of {requested} unique utterances are reachable"
    )]
    Exhausted {
        attempts: usize,
        achieved: usize,
        requested: usize,
    },

    /// The translation backend failed for one pivot language.
    #[error("translation backend failed for pivot '{lang}': {msg}")]
    Backend { lang: String, msg: String },

    /// Invalid configuration or arguments.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Annotate an I/O failure with the path involved.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
