use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("direct solve is inaccurate: residual energy norm {residual:e} exceeds tolerance {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("invalid splitting component {index}: {reason}")]
    InvalidComponent { index: usize, reason: String },

    #[error("splitting does not span the space: rank {rank} < dimension {dimension}")]
    NotSpanning { rank: usize, dimension: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("component index {index} out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("greedy pool is empty at step {step}")]
    EmptyPool { step: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("cannot fit rate: {0}")]
    RateFit(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
