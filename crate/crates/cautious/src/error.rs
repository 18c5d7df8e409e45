//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by fitting, calibration, prediction, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid feature: {0}")]
    InvalidFeature(String),

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("k must be in [1, {n}], got {k}")]
    InvalidK { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("alpha must be in (0,1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("class {0:?} already present")]
    DuplicateClass(String),

    #[error("removing the last class would leave an empty classifier")]
    EmptyClassifier,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("line {line}: expected {expected} fields, got {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: non-finite or unparsable value {value:?}")]
    NonFiniteValue { line: u64, value: String },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: u64, id: String },

    #[error("model format version mismatch: supported {supported}, found {found}")]
    VersionMismatch { supported: String, found: String },

    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),

    #[error("missing class file for {label:?}: {path}")]
    MissingClassFile { label: String, path: PathBuf },

    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
