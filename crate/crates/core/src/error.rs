use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("angle {0} deg outside the visible region (-90, 90)")]
    AngleDomain(f64),

    #[error("no propagation paths")]
    NoPaths,

    #[error("invalid capture layout: {0}")]
    Layout(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid source count {requested} for {elements} array elements")]
    SourceCount { requested: usize, elements: usize },

    #[error("rank deficient: effective rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("slot rejected: correlation peak {peak:.3e} below threshold {threshold:.3e}")]
    SlotRejected { peak: f64, threshold: f64 },

    #[error("missing sidecar metadata file {0}")]
    MissingSidecar(PathBuf),

    #[error("malformed sidecar {path}: {message}")]
    Sidecar { path: PathBuf, message: String },

    #[error("channel file {path} truncated: {len} bytes is not a whole number of IQ pairs")]
    Truncated { path: PathBuf, len: u64 },

    #[error("channel file {path} holds {actual} samples, sidecar declares {declared}")]
    Inconsistent {
        path: PathBuf,
        declared: usize,
        actual: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
