//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    #[error("quantile argument must lie in [0, 1], got {0}")]
    QuantileOutOfRange(f64),

    #[error("a market profile needs at least one bidder")]
    EmptyProfile,

    #[error("bid batch is empty")]
    EmptyBatch,

    #[error("bid profiles have inconsistent widths: expected {expected}, profile {index} has {got}")]
    RaggedBatch {
        expected: usize,
        index: usize,
        got: usize,
    },

    #[error("lambda exceeds bidders per profile: lambda = {lambda}, bidders = {n}")]
    LambdaExceedsBidders { lambda: f64, n: usize },

    #[error("lambda must be nonnegative and finite, got {0}")]
    InvalidLambda(f64),

    #[error("batch csv: row {row}, column {column}: {message}")]
    BatchCsv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("delta must lie strictly inside (0, 1), got {0}")]
    DeltaOutOfRange(f64),

    #[error("perturbation alpha must lie strictly inside (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),

    #[error("the noise distribution has no density on the real line")]
    NoiseWithoutDensity,

    #[error("the value densities all vanish at the clearing price; sensitivity is undefined")]
    ZeroDensityAtPrice,

    #[error("the smoothing kernel mass vanishes at the reserve; sensitivity is undefined")]
    ZeroKernelMass,

    #[error("the aggregate bid map is not invertible on the requested range")]
    NonInvertibleMap,

    #[error("the second-value normalizer needs at least two bidders")]
    NormalizerNeedsTwoBidders,

    #[error("experiment grid: {0}")]
    InvalidGrid(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json: {0}")]
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

pub type Result<T> = std::result::Result<T, Error>;
