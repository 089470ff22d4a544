use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic number {found:#010x} in {path} (expected {expected})")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: &'static str,
    },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("dimension mismatch in {path}: {detail}")]
    DimensionMismatch { path: PathBuf, detail: String },

    #[error("CIFAR-10 file {path} has {len} bytes, not a multiple of 3073")]
    CifarSize { path: PathBuf, len: u64 },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("input has {found} pixels, architecture expects {expected}")]
    InputShape { expected: usize, found: usize },

    #[error("activation cache does not belong to this model/input")]
    CacheMismatch,

    #[error("non-finite value encountered during training: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("split sizes sum to {requested}, pool holds only {pool}")]
    SplitOverflow { requested: usize, pool: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("need at least one positive and one negative sample (got {n_pos} positive, {n_neg} negative)")]
    DegenerateClasses { n_pos: usize, n_neg: usize },

    #[error("solver did not converge after {iterations} iterations (last objective change {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("requested {requested} samples of {concept}, pool has {available}")]
    PoolExhausted {
        concept: String,
        requested: usize,
        available: usize,
    },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("sample-id audit failed for member {member}: {overlap} evaluation ids also used for training (e.g. {example})")]
    AuditFailed {
        member: usize,
        overlap: usize,
        example: String,
    },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
