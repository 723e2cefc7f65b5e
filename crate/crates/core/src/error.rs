use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample {id}: expected {expected} features, got {got}")]
    DimensionMismatch { id: usize, expected: usize, got: usize },

    #[error("parameter vector has length {got}, model expects {expected}")]
    ParamCount { expected: usize, got: usize },

    #[error("sample {id}: label {label} is not valid for this model")]
    BadLabel { id: usize, label: String },

    #[error("non-finite value in {layer}")]
    NonFinite { layer: String },

    #[error("gradient norm is zero (within machine precision)")]
    ZeroGradient,

    #[error("empty batch")]
    EmptyBatch,

    #[error("duplicate sample id {0} in batch")]
    DuplicateId(usize),

    #[error("cannot select {requested} of {available} samples")]
    SubsetTooLarge { requested: usize, available: usize },

    #[error("DLP must be finite and non-negative, got {0}")]
    InvalidDlp(f64),

    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("smoothness constant unavailable for {0}")]
    SmoothnessUnavailable(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("bad {what} data: {message}")]
    Format { what: &'static str, message: String },

    #[error("{0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
