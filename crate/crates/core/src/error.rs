use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell that is not a finite real number. `row` and `col` are 1-based
    /// and count data rows only (a header row is not counted).
    #[error("cannot parse {cell:?} as a finite number at row {row}, column {col}")]
    Parse { row: usize, col: usize, cell: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid neighbor count k={k} for {n} points")]
    InvalidK { k: usize, n: usize },

    #[error("factorization did not converge: {0}")]
    Convergence(String),

    #[error("component {index} has a zero singular value")]
    ZeroSingularValue { index: usize },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
