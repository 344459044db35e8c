use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum ChmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("value {value} at index {index} outside [0, 1]")]
    OutOfRange { value: f64, index: usize },

    #[error("label {label} not below class count {class_count}")]
    LabelOutOfRange { label: u32, class_count: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("feature width mismatch: classifier expects {expected}, got {actual}")]
    FeatureWidth { expected: usize, actual: usize },

    #[error("insufficient samples: need at least {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("class {class} absent from training labels; cannot train a one-vs-all classifier on negatives only")]
    MissingClass { class: usize },

    #[error("channel mismatch: model expects {expected} channel(s), image has {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("upsample crop target {target_width}x{target_height} exceeds produced {width}x{height}")]
    CropTooLarge {
        target_width: usize,
        target_height: usize,
        width: usize,
        height: usize,
    },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("truncated or corrupt file: {}", path.display())]
    Truncated { path: PathBuf },

    #[error("model format version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("weight blob {}: expected {expected} bytes, found {found}", path.display())]
    BlobLength {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("no groundtruth boundaries in the entire dataset")]
    NoBoundaries,

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl ChmError {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        ChmError::DimensionMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ChmError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ChmError>;
