use std::io;

use thiserror::Error;

/// Errors produced by the labeler.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] io::Error),

    /// Malformed CoNLL-2009 input.
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("no dependency path between tokens {from} and {to}")]
    NoPath { from: usize, to: usize },

    /// Shape or index problems in network inputs.
    #[error("invalid network input: {0}")]
    Shape(String),

    /// Unreadable, corrupt, or version-mismatched model files and bundles.
    #[error("model file: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Gold and predicted corpora do not line up.
    #[error("corpus alignment: {0}")]
    Alignment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}
