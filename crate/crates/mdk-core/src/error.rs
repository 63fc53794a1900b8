//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Arguments violate an operation's domain.
    #[error("{0}")]
    InvalidInput(String),

    /// A query point falls outside the data span (no extrapolation).
    #[error("{0}")]
    OutOfRange(String),

    /// Two patterns do not share a grid or frequency.
    #[error("{0}")]
    GridMismatch(String),

    /// A pattern radiates no power, so ratio metrics are undefined.
    #[error("degenerate pattern: {0}")]
    DegeneratePattern(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}
