use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("column `{column}` not found in {path}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("classification labels need at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("test fraction {fraction} leaves an empty partition for {n} samples")]
    EmptyPartition { fraction: f64, n: usize },
    #[error("operation requires {expected} labels")]
    UnsupportedTask { expected: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,

    #[error("vector with norm {norm:e} cannot be amplitude encoded")]
    Unencodable { norm: f64 },
    #[error("register size mismatch: {left} vs {right} qubits")]
    RegisterMismatch { left: usize, right: usize },
    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("cannot seed {k} clusters from {n} samples")]
    TooFewSamples { k: usize, n: usize },
    #[error("cluster model has no outputs; call label_clusters first")]
    Unlabeled,

    #[error("model format error: {0}")]
    Format(String),
}
