use thiserror::Error;

use crate::states::ValidityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |M - M^dagger| = {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix data has {found} entries, expected {expected}")]
    BadShape { expected: usize, found: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("parameter {name} = {value} is outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("state vector norm {norm} deviates from 1 by more than 1e-6")]
    NotNormalized { norm: f64 },

    #[error("dimension {0} is too small, need at least 2")]
    DimTooSmall(usize),

    #[error("invalid angular momentum labels: {0}")]
    InvalidLabels(String),

    #[error("subsystem A must not be larger than subsystem B (got {a}x{b})")]
    DimOrder { a: usize, b: usize },

    #[error("unsupported dimensions {a}x{b}: {what}")]
    UnsupportedDims { a: usize, b: usize, what: &'static str },

    #[error("invalid weights: {0}")]
    WeightInvalid(String),

    #[error("analyzer is not a complete orthogonal projector set: {0}")]
    IncompleteAnalyzer(String),

    #[error("analyzer outcome labels are ambiguous: projector {index} has rank {rank}")]
    AmbiguousAnalyzer { index: usize, rank: usize },

    #[error("probability {value:.3e} is negative beyond rounding")]
    NegativeProbability { value: f64 },

    #[error("ill-conditioned reconstruction: {0}")]
    IllConditioned(String),

    #[error("invalid tomography series: {0}")]
    InvalidSeries(String),

    #[error("dims must list one or two subsystem sizes, found {0:?}")]
    BadDims(Vec<usize>),

    #[error("state expects bipartite dimensions")]
    NotBipartite,

    #[error("invalid density matrix: {0}")]
    InvalidState(Box<ValidityReport>),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
