use thiserror::Error;

/// Everything that can go wrong while building a model or evaluating it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("model is not transient: {0}")]
    NonTransient(String),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("near-critical model: {0}")]
    NearCritical(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("factor {factor} is not flagged transitive")]
    NotTransitive { factor: usize },

    #[error("unsupported factor {factor}: {reason}")]
    Unsupported { factor: usize, reason: String },

    #[error("invalid simulation parameters: {0}")]
    InvalidSimulation(String),

    #[error("enumeration exceeded {limit} words at step {step}")]
    Explosion { limit: usize, step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
