use std::io;

use thiserror::Error;

/// Errors raised by the completion library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (shape, range, mode).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A dense factorization failed to produce a usable result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
