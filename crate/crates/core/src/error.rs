use thiserror::Error;

/// Errors raised by design computation, verification and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A mean or stimulus falls outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate their constraints.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Stimuli are not strictly increasing (or are negative).
    #[error("stimuli must be non-negative and strictly increasing, got {0:?}")]
    Order([f64; 3]),

    /// Numeric overflow or a non-finite intermediate.
    #[error("range error: {0}")]
    Range(String),

    /// A formula is numerically degenerate at the given inputs.
    #[error("precision error: {0}")]
    Precision(String),

    /// No valid design exists for the stated bounds and parameters.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The bracketed root search could not bracket or converge.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// The requested path is not supported under the current options.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A grid search would exceed the configured cell cap.
    #[error("grid of {cells} cells exceeds the cap of {cap}")]
    Budget { cells: u64, cap: u64 },

    /// Invalid simulation or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Fisher scoring did not converge.
    #[error("Fisher scoring did not converge after {iterations} iterations (max |score| = {score:e})")]
    NonConvergence { iterations: usize, score: f64 },

    /// The scoring matrix is numerically singular.
    #[error("information matrix is numerically singular (condition estimate {condition:e})")]
    SingularInformation { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
