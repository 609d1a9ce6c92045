use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive semidefinite (eigenvalue {min_eig:e} against max {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("too few points: {got} (need {need})")]
    TooFewPoints { got: usize, need: usize },

    #[error("recursion depth {depth} exceeds the bound {max_depth}")]
    DepthExceeded { depth: usize, max_depth: usize },

    #[error("bad quantile rank m1={m1} for {len} values")]
    BadRank { m1: usize, len: usize },

    #[error("all filter scores are zero")]
    AllZeroScores,

    #[error("no subinterval holds at most {limit} values")]
    NoSparseSubinterval { limit: f64 },

    #[error("quantile range is degenerate (q_left = q_right = {0})")]
    DegenerateRange(f64),

    #[error("bad sample counts: {0}")]
    BadCounts(String),

    #[error("bad mixture weights: {0}")]
    BadWeights(String),

    #[error("unknown adversary `{0}`")]
    UnknownAdversary(String),

    #[error("bad adversary parameter `{name}`: {reason}")]
    BadAdversaryParam { name: String, reason: String },

    #[error("subset of size {got} is below the required {need}")]
    SubsetTooSmall { got: usize, need: usize },

    #[error("kernel of the first matrix is not contained in the kernel of the second")]
    KernelNotNested,

    #[error("premise violated: {0}")]
    PremiseViolated(String),

    #[error("dataset carries no labels")]
    MissingLabels,

    #[error("index {index} out of range for dataset of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid file {path}: {reason}")]
    InvalidFile { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable identifier, used by the CLI error objects and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPsd { .. } => "not_psd",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NonFinite(_) => "non_finite",
            Error::Empty(_) => "empty",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::DepthExceeded { .. } => "depth_exceeded",
            Error::BadRank { .. } => "bad_rank",
            Error::AllZeroScores => "all_zero_scores",
            Error::NoSparseSubinterval { .. } => "no_sparse_subinterval",
            Error::DegenerateRange(_) => "degenerate_range",
            Error::BadCounts(_) => "bad_counts",
            Error::BadWeights(_) => "bad_weights",
            Error::UnknownAdversary(_) => "unknown_adversary",
            Error::BadAdversaryParam { .. } => "bad_adversary_param",
            Error::SubsetTooSmall { .. } => "subset_too_small",
            Error::KernelNotNested => "kernel_not_nested",
            Error::PremiseViolated(_) => "premise_violated",
            Error::MissingLabels => "missing_labels",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidFile { .. } => "invalid_file",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidFile { .. }
                | Error::Json(_)
                | Error::Csv(_)
                | Error::UnknownAdversary(_)
                | Error::BadAdversaryParam { .. }
                | Error::BadCounts(_)
                | Error::BadWeights(_)
                | Error::DimensionMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::MissingLabels
                | Error::Io { .. }
        )
    }
}
