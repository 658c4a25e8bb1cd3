use std::io;

use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant does not hold; the message names it.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Argument outside an operation's domain.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Tensor or image dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    /// A file could be read but its content is not in the expected format.
    #[error("malformed file: {0}")]
    Format(String),
    /// A numerical quantity is degenerate (zero contrast, empty noise region, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the command-line front end:
    /// 1 validation, 2 I/O, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) | Error::Shape(_) => 1,
            Error::Io(_) | Error::Format(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
