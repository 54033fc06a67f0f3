use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid mismatch: expected M = {expected}, found M = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite observable at shift {shift}, sample {sample}, xi = {xi:?}")]
    NonFiniteObservable {
        shift: usize,
        sample: usize,
        xi: Vec<f64>,
    },

    #[error("reference solution refused for m = {m} > 4; use standard-error mode instead")]
    ReferenceTooLarge { m: usize },

    #[error("rate fit refused: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI, grouped by failure category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => 2,
            Error::Io { .. } | Error::Json(_) => 3,
            Error::NonFinite(_)
            | Error::NonFiniteObservable { .. }
            | Error::Domain(_)
            | Error::DimensionMismatch { .. }
            | Error::GridMismatch { .. } => 4,
            Error::ReferenceTooLarge { .. } | Error::DegenerateFit(_) => 5,
        }
    }
}
