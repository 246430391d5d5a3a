use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fully masked logits")]
    FullyMaskedLogits,

    #[error("covariance not factorizable (jitter escalated to {max_jitter:e})")]
    NotFactorizable { max_jitter: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("all class counts are zero")]
    EmptyCounts,

    #[error("target class {class} is masked (absent from the prior)")]
    MaskedTarget { class: usize },

    #[error("zero normalizer in posterior reweighting")]
    ZeroNormalizer,

    #[error("empty sample set")]
    EmptySamples,

    #[error(
        "insufficient data for domain covariance: domain {domain} has no class with at least \
         {min_samples} samples (lower `cov_min_samples` to relax the gate)"
    )]
    InsufficientCovarianceData { domain: usize, min_samples: usize },

    #[error("domain {0} is already present in the statistics repository")]
    DuplicateDomain(usize),

    #[error("missing covariance for domain {0}")]
    MissingDomainCovariance(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("inconsistent benchmark: {0}")]
    Inconsistent(String),

    #[error("expert pool is empty")]
    EmptyPool,

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("missing evaluation snapshot for stage {0}")]
    MissingSnapshot(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
