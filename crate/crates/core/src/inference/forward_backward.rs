//! Scaled forward-backward recursions.
//!
//! The forward pass normalizes each step by its total mass and accumulates
//! the log normalizers, which yields the log-likelihood and keeps all
//! intermediate values in [0, 1] regardless of series length. The backward
//! pass reuses the forward normalizers so that smoothing probabilities come
//! out as plain products without further normalization.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{
    state_density_continuous, state_pmf_discretized, EmissionMode, ModelParams, SeasonTable,
    SeriesData,
};

use super::PosteriorSet;

/// Initial distribution of the hidden chain.
#[derive(Debug, Clone, Copy)]
pub enum InitDist<'a> {
    /// Stationary distribution of the transition matrix.
    Stationary,
    Given(&'a [f64]),
}

/// State-level emission weights `f_{k,t}(Y_t)` for every observation,
/// evaluated once up front.
pub(crate) fn emission_table(params: &ModelParams, data: &SeriesData) -> Result<Array2<f64>> {
    data.check_against(&params.hyper)?;
    let season = SeasonTable::new(params);
    let n = data.n();
    let k_n = params.hyper.k;
    let mut dens = Array2::<f64>::zeros((n, k_n));
    match params.hyper.mode {
        EmissionMode::Continuous => {
            for t in 0..n {
                let y = data.values[t];
                if y < 0.0 || !y.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "observation {y} at index {t} outside [0, inf)"
                    )));
                }
                let day = data.day_of_year[t] as usize;
                for k in 0..k_n {
                    dens[[t, k]] = state_density_continuous(y, k, season.scale(k, day), params);
                }
            }
        }
        EmissionMode::Discretized { resolution } => {
            for t in 0..n {
                let j = (data.values[t] / resolution).round() as u64;
                let day = data.day_of_year[t] as usize;
                for k in 0..k_n {
                    dens[[t, k]] = state_pmf_discretized(j, k, season.scale(k, day), resolution, params);
                }
            }
        }
    }
    Ok(dens)
}

pub(crate) fn resolve_init(params: &ModelParams, init: InitDist<'_>) -> Result<Vec<f64>> {
    match init {
        InitDist::Stationary => params.stationary(),
        InitDist::Given(pi) => {
            if pi.len() != params.hyper.k {
                return Err(Error::DimensionMismatch(format!(
                    "initial distribution has length {}, expected {}",
                    pi.len(),
                    params.hyper.k
                )));
            }
            let sum: f64 = pi.iter().sum();
            if (sum - 1.0).abs() > 1e-8 || pi.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidInput("initial distribution is not a distribution".into()));
            }
            Ok(pi.to_vec())
        }
    }
}

/// Forward pass: normalized filter states and the raw per-step normalizers.
fn forward(
    params: &ModelParams,
    dens: &Array2<f64>,
    pi: &[f64],
) -> Result<(Array2<f64>, Vec<f64>)> {
    let (n, k_n) = dens.dim();
    let mut alpha = Array2::<f64>::zeros((n, k_n));
    let mut norms = Vec::with_capacity(n);
    let mut c = 0.0;
    for k in 0..k_n {
        let v = pi[k] * dens[[0, k]];
        alpha[[0, k]] = v;
        c += v;
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::DegenerateLikelihood { index: 0 });
    }
    for k in 0..k_n {
        alpha[[0, k]] /= c;
    }
    norms.push(c);
    for t in 1..n {
        let mut c = 0.0;
        for k in 0..k_n {
            let mut pred = 0.0;
            for l in 0..k_n {
                pred += alpha[[t - 1, l]] * params.q[[l, k]];
            }
            let v = pred * dens[[t, k]];
            alpha[[t, k]] = v;
            c += v;
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::DegenerateLikelihood { index: t });
        }
        for k in 0..k_n {
            alpha[[t, k]] /= c;
        }
        norms.push(c);
    }
    Ok((alpha, norms))
}

/// Log-likelihood via the scaled forward recursion.
pub fn log_likelihood(params: &ModelParams, data: &SeriesData, init: InitDist<'_>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let dens = emission_table(params, data)?;
    let pi = resolve_init(params, init)?;
    let (_, norms) = forward(params, &dens, &pi)?;
    Ok(norms.iter().map(|c| c.ln()).sum())
}

/// Log-likelihood via an independently scaled backward recursion. Agrees
/// with [`log_likelihood`] up to floating-point error; kept as an algebraic
/// cross-check.
pub(crate) fn log_likelihood_backward(
    params: &ModelParams,
    data: &SeriesData,
    init: InitDist<'_>,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let dens = emission_table(params, data)?;
    let pi = resolve_init(params, init)?;
    let (n, k_n) = dens.dim();
    let mut beta = vec![1.0f64; k_n];
    let mut log_scale = 0.0f64;
    for t in (0..n - 1).rev() {
        let mut next = vec![0.0f64; k_n];
        for k in 0..k_n {
            let mut acc = 0.0;
            for l in 0..k_n {
                acc += params.q[[k, l]] * dens[[t + 1, l]] * beta[l];
            }
            next[k] = acc;
        }
        let norm: f64 = next.iter().sum::<f64>() / k_n as f64;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateLikelihood { index: t + 1 });
        }
        for v in next.iter_mut() {
            *v /= norm;
        }
        log_scale += norm.ln();
        beta = next;
    }
    let head: f64 = (0..k_n).map(|k| pi[k] * dens[[0, k]] * beta[k]).sum();
    if !(head > 0.0) || !head.is_finite() {
        return Err(Error::DegenerateLikelihood { index: 0 });
    }
    Ok(head.ln() + log_scale)
}

/// Full E-step with the stationary initial distribution.
pub fn e_step(params: &ModelParams, data: &SeriesData) -> Result<PosteriorSet> {
    let pi = params.stationary()?;
    e_step_with_init(params, data, &pi)
}

/// Full E-step with an explicit initial distribution (the EM loop treats the
/// initial distribution as a free parameter).
pub fn e_step_with_init(params: &ModelParams, data: &SeriesData, pi: &[f64]) -> Result<PosteriorSet> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let dens = emission_table(params, data)?;
    let pi = resolve_init(params, InitDist::Given(pi))?;
    let (alpha, norms) = forward(params, &dens, &pi)?;
    let (n, k_n) = dens.dim();
    let m_n = params.hyper.m;
    let season = SeasonTable::new(params);

    let mut smoothing = Array2::<f64>::zeros((n, k_n));
    let mut pair = Array3::<f64>::zeros((n.saturating_sub(1), k_n, k_n));

    // backward variables scaled by the forward normalizers
    let mut beta = vec![1.0f64; k_n];
    for k in 0..k_n {
        smoothing[[n - 1, k]] = alpha[[n - 1, k]];
    }
    for t in (0..n - 1).rev() {
        let c_next = norms[t + 1];
        let mut beta_t = vec![0.0f64; k_n];
        for k in 0..k_n {
            let mut acc = 0.0;
            for l in 0..k_n {
                let joint = params.q[[k, l]] * dens[[t + 1, l]] * beta[l] / c_next;
                pair[[t, k, l]] = alpha[[t, k]] * joint;
                acc += joint;
            }
            beta_t[k] = acc;
            smoothing[[t, k]] = alpha[[t, k]] * acc;
        }
        beta = beta_t;
    }

    // mixture responsibilities: split each smoothing weight across components
    let mut resp = Array3::<f64>::zeros((n, k_n, m_n));
    for t in 0..n {
        let y = data.values[t];
        let day = data.day_of_year[t] as usize;
        for k in 0..k_n {
            let total = dens[[t, k]];
            if total > 0.0 {
                let w = smoothing[[t, k]] / total;
                for m in 0..m_n {
                    let comp =
                        crate::model::component_emission(y, k, m, season.scale(k, day), params);
                    resp[[t, k, m]] = w * params.p[[k, m]] * comp;
                }
            }
        }
    }

    Ok(PosteriorSet {
        smoothing,
        pair_smoothing: pair,
        responsibilities: resp,
        loglik: norms.iter().map(|c| c.ln()).sum(),
    })
}
