use std::path::PathBuf;

use thiserror::Error;

use crate::method::MethodId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid method identifier `{text}`: {reason}")]
    MethodId { text: String, reason: &'static str },

    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown method `{0}`")]
    UnknownMethod(MethodId),

    #[error("stack trace disjoint from coverage: no test covers any of the top {0} stack-trace methods")]
    DisjointTrace(usize),

    #[error("no usable stack trace: {0}")]
    NoTrace(String),

    #[error("no internal package prefixes configured")]
    NoPrefixes,

    #[error("precision cutoff k={k} out of range 1..={len}")]
    CutoffOutOfRange { k: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
