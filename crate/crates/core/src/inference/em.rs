//! EM fitting with random multi-restart.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HyperParams, ModelParams, SeriesData};
use crate::rng::stream_rng;

use super::forward_backward::e_step_with_init;
use super::m_step::{m_step_closed, m_step_emission};

/// Settings of the inner numerical optimizer used by the emission M-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Objective/gradient evaluation budget per state and M-step.
    pub max_evals: usize,
    /// Weight of the log-barrier keeping the seasonal scale above its floor.
    pub barrier_weight: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_evals: 200, barrier_weight: 1e-3 }
    }
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub restarts: usize,
    /// Stop when the relative log-likelihood improvement drops below this.
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            restarts: 40,
            epsilon: 1e-6,
            max_iters: 500,
            seed: 0,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Outcome of one restart: its log-likelihood trace, or the error that ended
/// it.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub restart: usize,
    pub trace: Vec<f64>,
    pub error: Option<String>,
}

/// Result of a full multi-restart fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Best parameters over all restarts, with rates in canonical ascending
    /// order.
    pub params: ModelParams,
    pub loglik: f64,
    /// Log-likelihood trace of the winning restart.
    pub loglik_trace: Vec<f64>,
    pub restarts: usize,
    pub best_restart: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Per-restart traces (including failed restarts), for the trace CSV.
    pub restart_traces: Vec<RestartOutcome>,
}

/// One EM run from an explicit starting point.
#[derive(Debug, Clone)]
pub struct SingleFit {
    pub params: ModelParams,
    /// Fitted free initial distribution (not part of the model file; reported
    /// models use the stationary distribution of Q).
    pub pi: Vec<f64>,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Random starting point: transition rows are uniform draws plus twice the
/// identity (renormalized), mixture weights are flat-Dirichlet, rates are
/// log-uniform on [0.05, 20] sorted ascending, seasonal coefficients start
/// at zero. The initial distribution is the stationary law of the drawn
/// transition matrix.
pub fn random_init(hyper: &HyperParams, rng: &mut impl Rng) -> Result<(ModelParams, Vec<f64>)> {
    let k_n = hyper.k;
    let m_n = hyper.m;
    let mut q = Array2::<f64>::zeros((k_n, k_n));
    for i in 0..k_n {
        let mut row: Vec<f64> = (0..k_n).map(|_| rng.gen::<f64>()).collect();
        row[i] += 2.0;
        let s: f64 = row.iter().sum();
        for (j, v) in row.iter().enumerate() {
            q[[i, j]] = v / s;
        }
    }
    let mut p = Array2::<f64>::zeros((k_n, m_n));
    for i in 0..k_n {
        // flat Dirichlet via normalized exponentials
        let draws: Vec<f64> = (0..m_n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let s: f64 = draws.iter().sum();
        for (m, v) in draws.iter().enumerate() {
            p[[i, m]] = v / s;
        }
    }
    let mut lambda = Array2::<f64>::zeros((k_n, m_n - 1));
    let (lo, hi) = (0.05f64.ln(), 20f64.ln());
    for i in 0..k_n {
        let mut row: Vec<f64> = (0..m_n - 1).map(|_| rng.gen_range(lo..hi).exp()).collect();
        row.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (m, v) in row.into_iter().enumerate() {
            lambda[[i, m]] = v;
        }
    }
    let beta = Array2::<f64>::zeros((k_n, 2 * hyper.d));
    let params = ModelParams::new(*hyper, q, p, lambda, beta)?;
    let pi = params.stationary()?;
    Ok((params, pi))
}

/// Runs EM from one starting point until the relative improvement drops
/// below `epsilon` or `max_iters` M-steps were taken.
pub fn em_single_start(
    data: &SeriesData,
    params0: ModelParams,
    pi0: Vec<f64>,
    cfg: &EmConfig,
) -> Result<SingleFit> {
    if data.n() < 2 {
        return Err(Error::InvalidInput("EM needs at least two observations".into()));
    }
    let mut params = params0;
    let mut pi = pi0;
    let mut post = e_step_with_init(&params, data, &pi)?;
    let mut trace = vec![post.loglik];
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < cfg.max_iters {
        let (pi_new, q_new, p_new) = m_step_closed(&post)?;
        let emission = m_step_emission(&post, data, &params, &cfg.optimizer);
        params = ModelParams {
            hyper: params.hyper,
            q: q_new,
            p: p_new,
            lambda: emission.lambda,
            beta: emission.beta,
        };
        pi = pi_new;
        iterations += 1;

        post = e_step_with_init(&params, data, &pi)?;
        let prev = *trace.last().expect("trace is non-empty");
        trace.push(post.loglik);
        debug_assert!(
            post.loglik >= prev - 1e-9 * (1.0 + prev.abs()),
            "EM decreased the log-likelihood: {prev} -> {}",
            post.loglik
        );
        if (post.loglik - prev).abs() < cfg.epsilon * prev.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(SingleFit { params, pi, trace, iterations, converged })
}

/// Multi-restart EM fit. Restarts are independent, each seeded from
/// `(config seed, restart index)`, and may run concurrently; the best
/// log-likelihood wins, ties going to the lowest restart index. A restart
/// that fails (degenerate likelihood, dead state) is reported and skipped.
pub fn em_fit(data: &SeriesData, hyper: &HyperParams, cfg: &EmConfig) -> Result<FitReport> {
    hyper.validate()?;
    data.check_against(hyper)?;
    if data.n() < 2 {
        return Err(Error::InvalidInput("EM needs at least two observations".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }

    let runs: Vec<(RestartOutcome, Option<SingleFit>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r as u64);
            let run = random_init(hyper, &mut rng)
                .and_then(|(params0, pi0)| em_single_start(data, params0, pi0, cfg));
            match run {
                Ok(fit) => (
                    RestartOutcome { restart: r, trace: fit.trace.clone(), error: None },
                    Some(fit),
                ),
                Err(e) => {
                    log::debug!("restart {r} failed: {e}");
                    (
                        RestartOutcome { restart: r, trace: Vec::new(), error: Some(e.to_string()) },
                        None,
                    )
                }
            }
        })
        .collect();

    let mut best: Option<(usize, &SingleFit)> = None;
    for (r, (_, fit)) in runs.iter().enumerate() {
        if let Some(fit) = fit {
            let ll = *fit.trace.last().expect("non-empty trace");
            let better = match best {
                None => true,
                Some((_, cur)) => ll > *cur.trace.last().unwrap(),
            };
            if better {
                best = Some((r, fit));
            }
        }
    }

    let Some((best_restart, fit)) = best else {
        let last = runs
            .iter()
            .rev()
            .find_map(|(o, _)| o.error.clone())
            .unwrap_or_else(|| "unknown".into());
        return Err(Error::AllRestartsFailed { restarts: cfg.restarts, last });
    };

    let mut params = fit.params.clone();
    params.canonicalize_lambda_order();
    Ok(FitReport {
        params,
        loglik: *fit.trace.last().unwrap(),
        loglik_trace: fit.trace.clone(),
        restarts: cfg.restarts,
        best_restart,
        iterations: fit.iterations,
        converged: fit.converged,
        seed: cfg.seed,
        restart_traces: runs.into_iter().map(|(o, _)| o).collect(),
    })
}
