//! Seasonal hidden Markov models for daily rainfall.
//!
//! The observation process is a `K`-state hidden Markov chain whose emission
//! law in state `k` on day `t` is a mixture of a dry atom at zero and `M-1`
//! exponential components, with a trigonometric seasonal factor `s_k(t)`
//! scaling the exponential part. Observations may be kept continuous or
//! discretized to a fixed measurement resolution (0.1 mm by default), in
//! which case the exponential components become geometric laws on the grid.
//!
//! The crate provides:
//!
//! * [`model`] — parameter types, seasonal scale, emission densities/pmfs,
//!   stationary distributions and parameter validation;
//! * [`inference`] — scaled forward-backward smoothing, EM fitting with
//!   multi-restart, MAP and Viterbi decoding;
//! * [`spectral`] — moment-based recovery of emission projections, the
//!   stationary law and the transition matrix via SVD and simultaneous
//!   diagonalization, plus seasonality and mixture identification;
//! * [`simulate`] — deterministic, seeded simulation and parametric
//!   bootstrap ensembles;
//! * [`stats`] — validation statistics (daily moments, quantiles, spells,
//!   maxima, interannual totals, QQ data) with 95% prediction bands;
//! * [`ingest`] — ECA&D-style file parsing, 365-day calendar normalization
//!   and seeded missing-value imputation.
//!
//! All randomness flows through explicit seeds; see [`rng`] for how
//! independent streams are derived.

pub mod calendar;
pub mod error;
pub mod ingest;
pub mod inference;
pub mod model;
pub mod numeric;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    EmissionMode, HyperParams, ModelParams, ParamBounds, SeasonTable, SeriesData, Violation,
};
pub use inference::{EmConfig, FitReport, PosteriorSet};
pub use simulate::SimulationBatch;
pub use spectral::{BasisSpec, MomentSet, SpectralEstimate};
pub use stats::ValidationReport;
