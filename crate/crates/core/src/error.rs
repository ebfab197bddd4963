use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GhkError>;

#[derive(Debug, Error)]
pub enum GhkError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("lattice spacing mismatch: {left} vs {right}")]
    SpacingMismatch { left: f64, right: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{op}: work {work} exceeds budget {budget}")]
    BudgetExceeded { op: &'static str, work: u128, budget: u64 },

    #[error("{op}: grid of {cells} cells exceeds memory budget of {budget} cells")]
    MemoryBudget { op: &'static str, cells: u128, budget: usize },

    #[error("negative U({k}) accumulation {value:e} beyond clamp threshold {threshold:e}")]
    NegativeAccumulation { k: u32, value: f64, threshold: f64 },

    #[error("{0}: input function is zero")]
    ZeroFunction(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("ascent diverged: {0}")]
    Divergence(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GhkError {
    /// Stable short tag for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            GhkError::InvalidGrid(_) => "invalid-grid",
            GhkError::SpacingMismatch { .. } => "spacing-mismatch",
            GhkError::DimensionMismatch { .. } => "dimension-mismatch",
            GhkError::InvalidExponent(_) => "invalid-exponent",
            GhkError::InvalidArgument(_) => "invalid-argument",
            GhkError::BudgetExceeded { .. } => "budget-exceeded",
            GhkError::MemoryBudget { .. } => "memory-budget",
            GhkError::NegativeAccumulation { .. } => "negative-accumulation",
            GhkError::ZeroFunction(_) => "zero-function",
            GhkError::NonFinite(_) => "non-finite",
            GhkError::Divergence(_) => "divergence",
            GhkError::Format(_) => "format",
            GhkError::Io { .. } => "io",
            GhkError::Json(_) => "json",
        }
    }
}
