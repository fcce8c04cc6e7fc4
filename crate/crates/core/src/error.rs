use thiserror::Error;

/// Errors raised by the borrowing pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("shape mismatch: {what} (expected {expected}, got {got})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("propensity model separation along {direction} (|coefficient| = {magnitude:.3})")]
    Separation { direction: String, magnitude: f64 },

    #[error("propensity model information matrix is singular (collinear covariates)")]
    Collinearity,

    #[error("propensity model did not converge in replicate {replicate}: {reason}")]
    NonConvergence { replicate: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSize(_) => "invalid_size",
            Error::Shape { .. } => "shape",
            Error::DegenerateWeights(_) => "degenerate_weights",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::Domain(_) => "domain",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::Separation { .. } => "separation",
            Error::Collinearity => "collinearity",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
