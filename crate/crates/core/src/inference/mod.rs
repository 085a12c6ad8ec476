//! Likelihood evaluation, smoothing, EM fitting and state decoding.

mod decode;
mod em;
mod forward_backward;
mod m_step;
mod optim;

pub use decode::{map_states, viterbi};
pub use em::{
    em_fit, em_single_start, random_init, EmConfig, FitReport, OptimizerConfig, RestartOutcome,
    SingleFit,
};
pub use forward_backward::{e_step, e_step_with_init, log_likelihood, InitDist};
pub use m_step::{m_step_closed, m_step_emission, EmissionUpdate};

use ndarray::{Array2, Array3};

/// Posterior quantities from one E-step.
///
/// `smoothing[[t, k]]` is the probability of state `k` at time `t` given the
/// whole series, `pair_smoothing[[t, k, l]]` the probability of the
/// transition `k -> l` between `t` and `t+1`, and
/// `responsibilities[[t, k, m]]` the probability of state `k` together with
/// mixture component `m` (component 0 is the dry atom).
#[derive(Debug, Clone)]
pub struct PosteriorSet {
    pub smoothing: Array2<f64>,
    pub pair_smoothing: Array3<f64>,
    pub responsibilities: Array3<f64>,
    pub loglik: f64,
}

impl PosteriorSet {
    pub fn n(&self) -> usize {
        self.smoothing.nrows()
    }

    pub fn n_states(&self) -> usize {
        self.smoothing.ncols()
    }

    /// Largest violation of the internal consistency identities; used by
    /// tests and debug assertions.
    pub fn max_inconsistency(&self) -> f64 {
        let (n, k_n) = self.smoothing.dim();
        let m_n = self.responsibilities.dim().2;
        let mut worst = 0.0f64;
        for t in 0..n {
            let row_sum: f64 = self.smoothing.row(t).sum();
            worst = worst.max((row_sum - 1.0).abs());
            for k in 0..k_n {
                let resp_sum: f64 = (0..m_n).map(|m| self.responsibilities[[t, k, m]]).sum();
                worst = worst.max((resp_sum - self.smoothing[[t, k]]).abs());
                if t + 1 < n {
                    let pair_sum: f64 = (0..k_n).map(|l| self.pair_smoothing[[t, k, l]]).sum();
                    worst = worst.max((pair_sum - self.smoothing[[t, k]]).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests;
