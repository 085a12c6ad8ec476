//! Crate-wide error type.

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),

    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("observation {index} has zero density under every state (log-likelihood is -inf)")]
    DegenerateLikelihood { index: usize },

    #[error("state {state} has zero posterior occupancy ({occupancy:.3e})")]
    ZeroOccupancy { state: usize, occupancy: f64 },

    #[error("all {restarts} EM restarts failed; last error: {last}")]
    AllRestartsFailed { restarts: usize, last: String },

    #[error("transition matrix is reducible (positive-entry graph is not strongly connected)")]
    ReducibleChain,

    #[error("stationary distribution did not converge: {0}")]
    StationaryNonConvergence(String),

    #[error("moment matrix rank deficient: sigma_{k} = {sigma_k:.3e} <= rank_tol * sigma_1 = {threshold:.3e}")]
    RankDeficient { k: usize, sigma_k: f64, threshold: f64 },

    #[error("simultaneous diagonalization failed after {attempts} attempts: {reason} (residual {residual:.3e})")]
    DiagonalizationFailed { attempts: usize, reason: String, residual: f64 },

    #[error("non-positive conditional variance {value:.3e} at day {day}")]
    NonPositiveVariance { day: usize, value: f64 },

    #[error("ill-separated rates: lambda ratio {ratio} below 1+1e-3")]
    IllSeparatedRates { ratio: f64 },

    #[error("recovered negative mixture weight {weight:.3e} for component {component}")]
    NegativeWeight { component: usize, weight: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("calendar error: {0}")]
    Calendar(String),

    #[error("day of year {day} has no observed values to impute from")]
    NoDonor { day: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
