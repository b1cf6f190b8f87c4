use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sensor index {index} out of range for {m} sensors")]
    SensorOutOfRange { index: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarError::Io {
            path: path.into(),
            source,
        }
    }
}
