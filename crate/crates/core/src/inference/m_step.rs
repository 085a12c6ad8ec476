//! Closed-form and numerical M-step updates.
//!
//! The transition, weight and initial-distribution updates are the exact
//! maximizers of their terms of the EM intermediate quantity. The emission
//! update (rates and seasonal coefficients) maximizes its term numerically;
//! a candidate that fails to improve the term is dropped in favour of the
//! previous values (a null step), which preserves the generalized-EM
//! monotonicity guarantee.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{EmissionMode, ModelParams, SeriesData};
use crate::numeric::ln_1m_exp;

use super::optim::maximize;
use super::{OptimizerConfig, PosteriorSet};

/// Occupancy below which a state is considered dead and the restart is
/// abandoned.
pub(crate) const OCCUPANCY_FLOOR: f64 = 1e-12;

/// Floor on the seasonal scale enforced through the log-barrier.
pub(crate) const SCALE_FLOOR: f64 = 1e-3;

/// Closed-form updates `(pi, Q, p)` from one posterior set.
pub fn m_step_closed(post: &PosteriorSet) -> Result<(Vec<f64>, Array2<f64>, Array2<f64>)> {
    let (n, k_n) = post.smoothing.dim();
    let m_n = post.responsibilities.dim().2;
    if n < 2 {
        return Err(Error::InvalidInput("M-step needs at least two observations".into()));
    }

    let mut occ_full = vec![0.0f64; k_n];
    let mut occ_head = vec![0.0f64; k_n];
    for t in 0..n {
        for k in 0..k_n {
            let w = post.smoothing[[t, k]];
            occ_full[k] += w;
            if t + 1 < n {
                occ_head[k] += w;
            }
        }
    }
    for k in 0..k_n {
        if occ_full[k] < OCCUPANCY_FLOOR || occ_head[k] < OCCUPANCY_FLOOR {
            return Err(Error::ZeroOccupancy { state: k, occupancy: occ_full[k].min(occ_head[k]) });
        }
    }

    let mut pi: Vec<f64> = post.smoothing.row(0).to_vec();
    let pi_sum: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= pi_sum;
    }

    let mut q = Array2::<f64>::zeros((k_n, k_n));
    for t in 0..n - 1 {
        for k in 0..k_n {
            for l in 0..k_n {
                q[[k, l]] += post.pair_smoothing[[t, k, l]];
            }
        }
    }
    for k in 0..k_n {
        let row_sum: f64 = q.row(k).sum();
        for l in 0..k_n {
            q[[k, l]] /= row_sum;
        }
    }

    let mut p = Array2::<f64>::zeros((k_n, m_n));
    for t in 0..n {
        for k in 0..k_n {
            for m in 0..m_n {
                p[[k, m]] += post.responsibilities[[t, k, m]];
            }
        }
    }
    for k in 0..k_n {
        let row_sum: f64 = p.row(k).sum();
        for m in 0..m_n {
            p[[k, m]] /= row_sum;
        }
    }

    Ok((pi, q, p))
}

/// Result of the emission M-step.
#[derive(Debug, Clone)]
pub struct EmissionUpdate {
    pub lambda: Array2<f64>,
    pub beta: Array2<f64>,
    /// True when at least one state strictly improved its objective term.
    pub improved: bool,
    /// Total increase of the emission term of the intermediate quantity.
    pub objective_gain: f64,
}

/// Emission objective of one state, with responsibilities aggregated by
/// day-of-year: `A[m][tau]` is the total responsibility of component `m+1`
/// on calendar day `tau`, `B[m][tau]` the responsibility-weighted sum of the
/// observations.
pub(crate) struct EmissionObjective {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub a_tot: Vec<f64>,
    /// Trigonometric regressors, `T x 2d`.
    pub z: Array2<f64>,
    pub mode: EmissionMode,
    pub barrier_weight: f64,
}

impl EmissionObjective {
    pub fn new(
        post: &PosteriorSet,
        data: &SeriesData,
        params: &ModelParams,
        state: usize,
        barrier_weight: f64,
    ) -> Self {
        let hp = &params.hyper;
        let comp_n = hp.m - 1;
        let mut a = Array2::<f64>::zeros((comp_n, hp.t));
        let mut b = Array2::<f64>::zeros((comp_n, hp.t));
        for t in 0..data.n() {
            let tau = data.day_of_year[t] as usize - 1;
            let y = data.values[t];
            for m in 0..comp_n {
                let g = post.responsibilities[[t, state, m + 1]];
                a[[m, tau]] += g;
                b[[m, tau]] += g * y;
            }
        }
        let a_tot = (0..comp_n).map(|m| a.row(m).sum()).collect();
        let mut z = Array2::<f64>::zeros((hp.t, 2 * hp.d));
        for tau in 0..hp.t {
            for l in 1..=hp.d {
                let angle =
                    2.0 * std::f64::consts::PI * l as f64 * (tau + 1) as f64 / hp.t as f64;
                z[[tau, 2 * l - 2]] = angle.cos();
                z[[tau, 2 * l - 1]] = angle.sin();
            }
        }
        EmissionObjective { a, b, a_tot, z, mode: hp.mode, barrier_weight }
    }

    fn scales(&self, beta: &[f64]) -> Option<Vec<f64>> {
        let t_n = self.z.nrows();
        let mut s = Vec::with_capacity(t_n);
        for tau in 0..t_n {
            let mut v = 1.0;
            for (j, &bj) in beta.iter().enumerate() {
                v += self.z[[tau, j]] * bj;
            }
            if v <= SCALE_FLOOR {
                return None;
            }
            s.push(v);
        }
        Some(s)
    }

    /// Raw objective (no barrier) at explicit rates and scales.
    pub fn value(&self, lambda: &[f64], scales: &[f64]) -> f64 {
        let (comp_n, t_n) = self.a.dim();
        let mut acc = 0.0;
        match self.mode {
            EmissionMode::Continuous => {
                for m in 0..comp_n {
                    if self.a_tot[m] > 0.0 {
                        acc += self.a_tot[m] * lambda[m].ln();
                    }
                    for tau in 0..t_n {
                        let a = self.a[[m, tau]];
                        let b = self.b[[m, tau]];
                        if a > 0.0 || b > 0.0 {
                            acc -= a * scales[tau].ln() + lambda[m] * b / scales[tau];
                        }
                    }
                }
            }
            EmissionMode::Discretized { resolution } => {
                for m in 0..comp_n {
                    for tau in 0..t_n {
                        let a = self.a[[m, tau]];
                        let b = self.b[[m, tau]];
                        if a > 0.0 || b > 0.0 {
                            let x = resolution * lambda[m] / scales[tau];
                            acc += a * ln_1m_exp(x) - lambda[m] * b / scales[tau];
                        }
                    }
                }
            }
        }
        acc
    }

    /// Closed-form rate update given scales (continuous mode). Components
    /// with zero total responsibility keep their previous rate.
    pub fn profile_lambda(&self, scales: &[f64], prev: &[f64]) -> Vec<f64> {
        let (comp_n, t_n) = self.a.dim();
        (0..comp_n)
            .map(|m| {
                if self.a_tot[m] <= 0.0 {
                    return prev[m];
                }
                let denom: f64 = (0..t_n).map(|tau| self.b[[m, tau]] / scales[tau]).sum();
                if denom > 0.0 {
                    self.a_tot[m] / denom
                } else {
                    prev[m]
                }
            })
            .collect()
    }

    fn barrier(&self, scales: &[f64]) -> f64 {
        self.barrier_weight * scales.iter().map(|&s| (s - SCALE_FLOOR).ln()).sum::<f64>()
    }

    /// Profile objective over the seasonal coefficients (continuous mode):
    /// rates are profiled out in closed form, the gradient follows from the
    /// envelope theorem. Includes the barrier.
    pub fn beta_value_grad(&self, beta: &[f64], prev_lambda: &[f64]) -> Option<(f64, Vec<f64>)> {
        let scales = self.scales(beta)?;
        let lambda = self.profile_lambda(&scales, prev_lambda);
        let raw = self.value(&lambda, &scales);
        let (comp_n, t_n) = self.a.dim();
        let dim = beta.len();
        let mut grad = vec![0.0f64; dim];
        for tau in 0..t_n {
            let s = scales[tau];
            let mut coeff = 0.0;
            for m in 0..comp_n {
                coeff += -self.a[[m, tau]] + lambda[m] * self.b[[m, tau]] / s;
            }
            coeff /= s;
            coeff += self.barrier_weight / (s - SCALE_FLOOR);
            for j in 0..dim {
                grad[j] += coeff * self.z[[tau, j]];
            }
        }
        Some((raw + self.barrier(&scales), grad))
    }

    /// Joint objective over `x = (ln lambda_2.., beta..)` in discretized
    /// mode, with gradient. Includes the barrier.
    pub fn joint_value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let EmissionMode::Discretized { resolution } = self.mode else {
            panic!("joint objective is for discretized mode");
        };
        let (comp_n, t_n) = self.a.dim();
        let beta = &x[comp_n..];
        let scales = self.scales(beta)?;
        let lambda: Vec<f64> = x[..comp_n].iter().map(|u| u.exp()).collect();
        if lambda.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return None;
        }
        let mut value = self.barrier(&scales);
        let mut grad = vec![0.0f64; x.len()];
        for tau in 0..t_n {
            let s = scales[tau];
            let mut scale_coeff = 0.0;
            for m in 0..comp_n {
                let a = self.a[[m, tau]];
                let b = self.b[[m, tau]];
                if a <= 0.0 && b <= 0.0 {
                    continue;
                }
                let xv = resolution * lambda[m] / s;
                // 1/(e^x - 1); overflows to 0 for huge x, as it should
                let inv_em1 = 1.0 / xv.exp_m1();
                value += a * ln_1m_exp(xv) - lambda[m] * b / s;
                grad[m] += lambda[m] * (a * (resolution / s) * inv_em1 - b / s);
                scale_coeff += lambda[m] * (b - a * resolution * inv_em1) / (s * s);
            }
            scale_coeff += self.barrier_weight / (s - SCALE_FLOOR);
            for j in 0..beta.len() {
                grad[comp_n + j] += scale_coeff * self.z[[tau, j]];
            }
        }
        if !value.is_finite() {
            return None;
        }
        Some((value, grad))
    }
}

/// Emission M-step: per-state update of rates and seasonal coefficients.
///
/// Continuous mode: closed-form rates given the scales, then quasi-Newton on
/// the seasonal coefficients with the rates profiled out. Discretized mode:
/// joint quasi-Newton on `(ln lambda, beta)`. A state whose candidate does
/// not improve the objective keeps its previous values.
pub fn m_step_emission(
    post: &PosteriorSet,
    data: &SeriesData,
    prev: &ModelParams,
    cfg: &OptimizerConfig,
) -> EmissionUpdate {
    let hp = &prev.hyper;
    let comp_n = hp.m - 1;
    let mut lambda = prev.lambda.clone();
    let mut beta = prev.beta.clone();
    let mut gain = 0.0f64;

    for k in 0..hp.k {
        let obj = EmissionObjective::new(post, data, prev, k, cfg.barrier_weight);
        let lam_prev: Vec<f64> = prev.lambda.row(k).to_vec();
        let beta_prev: Vec<f64> = prev.beta.row(k).to_vec();
        let Some(scales_prev) = obj.scales(&beta_prev) else {
            // previous point infeasible for the barrier; null step
            log::debug!("state {k}: previous scales at the floor, emission step skipped");
            continue;
        };
        let value_prev = obj.value(&lam_prev, &scales_prev);

        let (mut best_lambda, mut best_beta, mut best_value) = match hp.mode {
            EmissionMode::Continuous => {
                let lam0 = obj.profile_lambda(&scales_prev, &lam_prev);
                let v0 = obj.value(&lam0, &scales_prev);
                let mut best = (lam0, beta_prev.clone(), v0);
                if hp.d > 0 {
                    let mut f = |b: &[f64]| obj.beta_value_grad(b, &lam_prev);
                    let out = maximize(&mut f, &beta_prev, cfg.max_evals);
                    if out.started {
                        if let Some(scales) = obj.scales(&out.x) {
                            let lam = obj.profile_lambda(&scales, &lam_prev);
                            let v = obj.value(&lam, &scales);
                            if v > best.2 {
                                best = (lam, out.x, v);
                            }
                        }
                    }
                }
                best
            }
            EmissionMode::Discretized { .. } => {
                let mut x0: Vec<f64> = lam_prev.iter().map(|l| l.ln()).collect();
                x0.extend_from_slice(&beta_prev);
                let mut f = |x: &[f64]| obj.joint_value_grad(x);
                let out = maximize(&mut f, &x0, cfg.max_evals);
                if out.started {
                    let lam: Vec<f64> = out.x[..comp_n].iter().map(|u| u.exp()).collect();
                    let bet: Vec<f64> = out.x[comp_n..].to_vec();
                    match obj.scales(&bet) {
                        Some(scales) => {
                            let v = obj.value(&lam, &scales);
                            (lam, bet, v)
                        }
                        None => (lam_prev.clone(), beta_prev.clone(), value_prev),
                    }
                } else {
                    (lam_prev.clone(), beta_prev.clone(), value_prev)
                }
            }
        };

        if !(best_value >= value_prev) || !best_value.is_finite() {
            // null step
            best_lambda = lam_prev.clone();
            best_beta = beta_prev.clone();
            best_value = value_prev;
        }
        gain += best_value - value_prev;
        for (m, v) in best_lambda.into_iter().enumerate() {
            lambda[[k, m]] = v;
        }
        for (j, v) in best_beta.into_iter().enumerate() {
            beta[[k, j]] = v;
        }
    }

    EmissionUpdate { lambda, beta, improved: gain > 0.0, objective_gain: gain }
}
