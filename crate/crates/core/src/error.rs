use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `position` is a 1-based line number for text
    /// formats and a byte offset for binary ones.
    #[error("{path}: parse error at {position}: {message}")]
    Parse {
        path: PathBuf,
        position: Position,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("trace shorter than {required_min} min ({actual_min:.2} min)")]
    TooShort { required_min: f64, actual_min: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("checkpoint rejected at byte {offset}: {message}")]
    Checkpoint { offset: u64, message: String },
}

/// Location of a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Line(usize),
    Byte(u64),
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Position::Line(n) => write!(f, "line {n}"),
            Position::Byte(n) => write!(f, "byte {n}"),
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        position: Position,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            position,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data rather than a bug or usage
    /// mistake. The CLI maps these to exit code 3.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Degenerate(_)
                | Error::TooShort { .. }
                | Error::Checkpoint { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
