//! Moment-based spectral recovery.
//!
//! Project the per-day emission laws on a finite orthonormal basis of
//! `L^2(delta_0 + Lebesgue)`, form the low-order moment tensors of a triple
//! of consecutive observations, and recover the emission projections, the
//! stationary law and the transition matrix by SVD and simultaneous
//! diagonalization. The recovered per-day emission laws then yield the
//! seasonal scale (through conditional variances) and the mixture
//! parameters (through tail peeling).
//!
//! Everything is identifiable only up to one global relabeling of the
//! states; recoveries at different days are aligned to a common labeling
//! before the transition matrix is assembled.

mod basis;
mod eig;
mod mixture;
mod moments;
mod recover;

pub use basis::{build_basis, emission_projection, BasisSpec};
pub use mixture::{
    analytic_variance, identify_mixture, recover_seasonality, MixtureFit, PeelOptions,
    SeasonalityFit,
};
pub use moments::{empirical_moments, exact_moments, MomentSet};
pub use recover::{spectral_recover, DayDiagnostics, RecoverConfig, SpectralDiagnostics, SpectralEstimate};
