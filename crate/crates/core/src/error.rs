use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading upstream files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: i/o error: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: csv error: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
    #[error("{context}: missing required column '{column}'")]
    MissingColumn { context: String, column: String },
    #[error("{context}: row {row}: {message}")]
    Data { context: String, row: usize, message: String },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

/// Numerical failures of the measures and statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("similarity undefined: zero-norm vector")]
    ZeroNorm,
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("correlation undefined: every value tied")]
    AllTied,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("shift {shift} leaves overlap {overlap} below minimum {min}")]
    OverlapTooShort { shift: i32, overlap: usize, min: usize },
    #[error("no category produced a defined value")]
    NoUsableCategory,
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

/// Failures of distance, embedding and clustering operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("empty geometry for '{0}'")]
    EmptyGeometry(String),
    #[error("dimension mismatch: expected {expected}, got {got} for '{label}'")]
    DimensionMismatch { label: String, expected: usize, got: usize },
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("label sets differ: {0}")]
    LabelMismatch(String),
    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("degenerate embedding: only {0} nonnegative eigenvalues")]
    DegenerateEmbedding(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}
