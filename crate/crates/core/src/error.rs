//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Coarse error class, used by the CLI to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid configuration or arguments.
    Config,
    /// Malformed or inconsistent input data.
    Data,
    /// Underlying I/O failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid {field}: {message}")]
    InvalidField {
        field: &'static str,
        message: String,
    },

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("degenerate frequency table: fewer than 2 distinct words")]
    DegenerateFrequencyTable,

    #[error("degenerate fit: fewer than 2 distinct x values")]
    DegenerateFit,

    #[error("empty ledger")]
    EmptyLedger,

    #[error("duplicate run_id {id:?} at line {line}")]
    DuplicateRunId { id: String, line: u64 },

    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenIdOutOfRange { id: u32, vocab_size: usize },

    #[error("vector length {len} is odd; rotation acts on pairs")]
    OddVectorLength { len: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::InvalidField { .. } => ErrorKind::Config,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
