use std::path::PathBuf;

use thiserror::Error;

/// Numeric kernel failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate {0}: zero dispersion")]
    Degenerate(&'static str),
    #[error("non-positive price {0}")]
    NonPositive(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("no usable data in {0}")]
    EmptyData(PathBuf),

    #[error("window error: anchor {anchor} with length {len} (series has {available} points)")]
    Window { anchor: usize, len: usize, available: usize },

    #[error("horizon error: anchor {anchor} + horizon {horizon} exceeds series length {available}")]
    Horizon { anchor: usize, horizon: usize, available: usize },

    #[error(transparent)]
    Math(#[from] MathError),

    #[error("render error: {0}")]
    Render(String),

    #[error("line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("schema version {found} not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("endpoint error: {0}")]
    Endpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
