//! Model parameters, seasonal scale and emission laws.
//!
//! The emission law in state `k` on day `t` is
//!
//! ```text
//! p_k1 * delta_0  +  sum_{m=2..M} p_km * Exp(lambda_km / s_k(t))
//! ```
//!
//! where `s_k(t) = 1 + Z(t) beta_k` is a trigonometric polynomial of degree
//! `d` and period `T` with constant term fixed to 1. In discretized mode the
//! observation is floored to the measurement grid and each exponential
//! component becomes a geometric law on that grid.

mod io;

pub use io::{read_model, write_model, ModelFile, ModelMeta};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability row sums.
pub const ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance when snapping discretized observations to the grid.
pub const GRID_TOL: f64 = 1e-9;

/// Observation-space mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EmissionMode {
    /// Atom at zero plus exponential mixture on (0, inf).
    Continuous,
    /// Observations floored to multiples of `resolution`; exponential
    /// components become geometric laws on the grid.
    Discretized { resolution: f64 },
}

impl EmissionMode {
    pub fn discretized_default() -> Self {
        EmissionMode::Discretized { resolution: 0.1 }
    }

    pub fn resolution(&self) -> Option<f64> {
        match self {
            EmissionMode::Continuous => None,
            EmissionMode::Discretized { resolution } => Some(*resolution),
        }
    }
}

/// Structural hyperparameters of the model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Number of hidden states.
    pub k: usize,
    /// Mixture size including the dry component.
    pub m: usize,
    /// Degree of the trigonometric seasonality.
    pub d: usize,
    /// Period length in days.
    pub t: usize,
    pub mode: EmissionMode,
}

impl HyperParams {
    pub fn new(k: usize, m: usize, d: usize, t: usize, mode: EmissionMode) -> Result<Self> {
        let hp = HyperParams { k, m, d, t, mode };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidHyper("K must be >= 1".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidHyper("M must be >= 2".into()));
        }
        if self.t < 1 {
            return Err(Error::InvalidHyper("T must be >= 1".into()));
        }
        if let EmissionMode::Discretized { resolution } = self.mode {
            if !(resolution > 0.0) {
                return Err(Error::InvalidHyper("resolution must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Full parameter vector of one model.
///
/// `q` is K x K, `p` is K x M (column 0 is the dry probability), `lambda`
/// is K x (M-1) and `beta` is K x 2d with layout
/// `(a_1, b_1, ..., a_d, b_d)` per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hyper: HyperParams,
    pub q: Array2<f64>,
    pub p: Array2<f64>,
    pub lambda: Array2<f64>,
    pub beta: Array2<f64>,
}

impl ModelParams {
    /// Builds and validates a parameter vector.
    pub fn new(
        hyper: HyperParams,
        q: Array2<f64>,
        p: Array2<f64>,
        lambda: Array2<f64>,
        beta: Array2<f64>,
    ) -> Result<Self> {
        hyper.validate()?;
        let params = ModelParams { hyper, q, p, lambda, beta };
        let violations = validate_params(&params, None);
        if violations.is_empty() {
            Ok(params)
        } else {
            Err(Error::InvalidParams(violations))
        }
    }

    pub fn n_states(&self) -> usize {
        self.hyper.k
    }

    /// Sorts exponential components by ascending rate within each state,
    /// permuting mixture weights accordingly. The dry weight stays in
    /// column 0. This is the canonical ordering convention; it does not
    /// change the law of the model.
    pub fn canonicalize_lambda_order(&mut self) {
        let (k_n, comp_n) = self.lambda.dim();
        for k in 0..k_n {
            let mut order: Vec<usize> = (0..comp_n).collect();
            order.sort_by(|&a, &b| {
                self.lambda[[k, a]]
                    .partial_cmp(&self.lambda[[k, b]])
                    .expect("rates are finite")
            });
            let lam_row: Vec<f64> = order.iter().map(|&j| self.lambda[[k, j]]).collect();
            let p_row: Vec<f64> = order.iter().map(|&j| self.p[[k, j + 1]]).collect();
            for j in 0..comp_n {
                self.lambda[[k, j]] = lam_row[j];
                self.p[[k, j + 1]] = p_row[j];
            }
        }
    }

    /// Stationary distribution of the transition matrix.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        stationary_distribution(&self.q)
    }
}

/// Uniform boundedness constraints on the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    /// Lower bound on every transition probability.
    pub delta: f64,
    /// Lower bound on the summed dry probabilities.
    pub p_bar_min: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Bounds on the seasonal scale over the whole period.
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl ParamBounds {
    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0 / k as f64) {
            return Err(Error::InvalidInput(format!(
                "delta must lie in (0, 1/K]; got {}",
                self.delta
            )));
        }
        if !(0.0 < self.lambda_min && self.lambda_min < self.lambda_max) {
            return Err(Error::InvalidInput("need 0 < lambda_min < lambda_max".into()));
        }
        if !(0.0 < self.sigma_min && self.sigma_min < self.sigma_max) {
            return Err(Error::InvalidInput("need 0 < sigma_min < sigma_max".into()));
        }
        Ok(())
    }
}

/// A daily observation sequence with calendar metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesData {
    /// Rainfall amounts in mm/day.
    pub values: Vec<f64>,
    /// Day-of-year index (1..=T) aligned with `values`.
    pub day_of_year: Vec<u32>,
    pub station: String,
}

impl SeriesData {
    pub fn new(values: Vec<f64>, day_of_year: Vec<u32>, station: impl Into<String>) -> Result<Self> {
        if values.len() != day_of_year.len() {
            return Err(Error::DimensionMismatch(format!(
                "values has length {} but day_of_year has length {}",
                values.len(),
                day_of_year.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "negative or non-finite value {} at index {}",
                values[i], i
            )));
        }
        if let Some(i) = day_of_year.iter().position(|&d| d < 1) {
            return Err(Error::InvalidInput(format!("day_of_year 0 at index {i}")));
        }
        Ok(SeriesData { values, day_of_year, station: station.into() })
    }

    /// Series whose calendar simply cycles 1..=T starting at day 1.
    pub fn cyclic(values: Vec<f64>, period: usize, station: impl Into<String>) -> Result<Self> {
        let doy = (0..values.len()).map(|i| (i % period) as u32 + 1).collect();
        SeriesData::new(values, doy, station)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks day-of-year indices against a period and, in discretized mode,
    /// that every value sits on the measurement grid.
    pub fn check_against(&self, hyper: &HyperParams) -> Result<()> {
        if let Some(i) = self.day_of_year.iter().position(|&d| d as usize > hyper.t) {
            return Err(Error::DimensionMismatch(format!(
                "day_of_year {} at index {i} exceeds period T={}",
                self.day_of_year[i], hyper.t
            )));
        }
        if let EmissionMode::Discretized { resolution } = hyper.mode {
            for (i, &v) in self.values.iter().enumerate() {
                let j = (v / resolution).round();
                if (v - j * resolution).abs() > GRID_TOL {
                    return Err(Error::InvalidInput(format!(
                        "value {v} at index {i} is not a multiple of the resolution {resolution}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One failed parameter constraint; `validate_params` collects these instead
/// of failing on the first.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BadShape { field: &'static str, expected: (usize, usize), got: (usize, usize) },
    QRowSum { state: usize, sum: f64 },
    QNegativeEntry { state: usize, col: usize, value: f64 },
    PRowSum { state: usize, sum: f64 },
    PNegativeEntry { state: usize, component: usize, value: f64 },
    LambdaNonPositive { state: usize, component: usize, value: f64 },
    ScaleNonPositive { state: usize, day: usize, value: f64 },
    BoundDelta { state: usize, col: usize, value: f64, delta: f64 },
    BoundDrySum { sum: f64, p_bar_min: f64 },
    BoundLambda { state: usize, component: usize, value: f64 },
    BoundScale { state: usize, day: usize, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::BadShape { field, expected, got } => write!(
                f,
                "{field} has shape {}x{}, expected {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            Violation::QRowSum { state, sum } => {
                write!(f, "Q row {} sums to {sum} (state {})", state + 1, state + 1)
            }
            Violation::QNegativeEntry { state, col, value } => {
                write!(f, "Q[{},{}] = {value} is negative", state + 1, col + 1)
            }
            Violation::PRowSum { state, sum } => write!(f, "p row {} sums to {sum}", state + 1),
            Violation::PNegativeEntry { state, component, value } => {
                write!(f, "p[{},{}] = {value} is negative", state + 1, component + 1)
            }
            Violation::LambdaNonPositive { state, component, value } => write!(
                f,
                "lambda[{},{}] = {value} is not positive",
                state + 1,
                component + 2
            ),
            Violation::ScaleNonPositive { state, day, value } => write!(
                f,
                "seasonal scale s_{}({day}) = {value} is not positive",
                state + 1
            ),
            Violation::BoundDelta { state, col, value, delta } => write!(
                f,
                "Q[{},{}] = {value} below delta = {delta}",
                state + 1,
                col + 1
            ),
            Violation::BoundDrySum { sum, p_bar_min } => {
                write!(f, "sum of dry probabilities {sum} below {p_bar_min}")
            }
            Violation::BoundLambda { state, component, value } => write!(
                f,
                "lambda[{},{}] = {value} outside [lambda_min, lambda_max]",
                state + 1,
                component + 2
            ),
            Violation::BoundScale { state, day, value } => write!(
                f,
                "seasonal scale s_{}({day}) = {value} outside [sigma_min, sigma_max]",
                state + 1
            ),
        }
    }
}

/// Reduces an arbitrary day index `t >= 1` into `1..=T`.
#[inline]
pub fn reduce_day(t: usize, period: usize) -> usize {
    (t - 1) % period + 1
}

/// Seasonal scale `s_k(t) = 1 + sum_l [a_l cos(2 pi l t / T) + b_l sin(2 pi l t / T)]`.
///
/// The day index is reduced mod `T` before any trigonometric evaluation, so
/// periodicity holds exactly in floating point.
pub fn seasonal_scale(t: usize, beta_k: ArrayView1<f64>, hyper: &HyperParams) -> f64 {
    debug_assert!(t >= 1, "day index is 1-based");
    debug_assert_eq!(beta_k.len(), 2 * hyper.d);
    let period = hyper.t as f64;
    let day = reduce_day(t, hyper.t) as f64;
    let mut s = 1.0;
    for l in 1..=hyper.d {
        let angle = 2.0 * std::f64::consts::PI * l as f64 * day / period;
        s += beta_k[2 * l - 2] * angle.cos() + beta_k[2 * l - 1] * angle.sin();
    }
    s
}

/// Precomputed `K x T` table of seasonal scales for one parameter vector.
///
/// Downstream loops index emissions by day-of-year thousands of times; the
/// table avoids re-evaluating the trigonometric polynomial.
#[derive(Debug, Clone)]
pub struct SeasonTable {
    scales: Array2<f64>,
    period: usize,
}

impl SeasonTable {
    pub fn new(params: &ModelParams) -> Self {
        Self::from_beta(&params.beta, &params.hyper)
    }

    pub fn from_beta(beta: &Array2<f64>, hyper: &HyperParams) -> Self {
        let mut scales = Array2::zeros((hyper.k, hyper.t));
        for k in 0..hyper.k {
            for day in 1..=hyper.t {
                scales[[k, day - 1]] = seasonal_scale(day, beta.row(k), hyper);
            }
        }
        SeasonTable { scales, period: hyper.t }
    }

    /// `s_k(t)` for any day index `t >= 1`.
    #[inline]
    pub fn scale(&self, k: usize, t: usize) -> f64 {
        self.scales[[k, reduce_day(t, self.period) - 1]]
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn min_scale(&self) -> f64 {
        self.scales.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Emission density at `y` for state `k` on day `t` (continuous mode), with
/// respect to the dominating measure `delta_0 + Lebesgue`.
///
/// `y = 0.0` is always the atom: the continuous part contributes only for
/// `y > 0`.
pub fn emission_density(y: f64, k: usize, t: usize, params: &ModelParams) -> Result<f64> {
    if !matches!(params.hyper.mode, EmissionMode::Continuous) {
        return Err(Error::InvalidInput(
            "emission_density requires Continuous mode; use emission_pmf".into(),
        ));
    }
    if y < 0.0 || !y.is_finite() {
        return Err(Error::InvalidInput(format!("observation {y} outside [0, inf)")));
    }
    let s = seasonal_scale(t, params.beta.row(k), &params.hyper);
    Ok(state_density_continuous(y, k, s, params))
}

/// Emission pmf at the grid value `y_tilde` for state `k` on day `t`
/// (discretized mode).
pub fn emission_pmf(y_tilde: f64, k: usize, t: usize, params: &ModelParams) -> Result<f64> {
    let resolution = match params.hyper.mode {
        EmissionMode::Discretized { resolution } => resolution,
        EmissionMode::Continuous => {
            return Err(Error::InvalidInput(
                "emission_pmf requires Discretized mode; use emission_density".into(),
            ))
        }
    };
    if y_tilde < 0.0 || !y_tilde.is_finite() {
        return Err(Error::InvalidInput(format!("observation {y_tilde} outside [0, inf)")));
    }
    let j = (y_tilde / resolution).round();
    if (y_tilde - j * resolution).abs() > GRID_TOL {
        return Err(Error::InvalidInput(format!(
            "observation {y_tilde} is not a multiple of the resolution {resolution}"
        )));
    }
    let s = seasonal_scale(t, params.beta.row(k), &params.hyper);
    Ok(state_pmf_discretized(j as u64, k, s, resolution, params))
}

/// Continuous state-level density given a precomputed scale. Hot path.
#[inline]
pub(crate) fn state_density_continuous(y: f64, k: usize, s: f64, params: &ModelParams) -> f64 {
    if y == 0.0 {
        return params.p[[k, 0]];
    }
    let mut acc = 0.0;
    for m in 0..params.hyper.m - 1 {
        let rate = params.lambda[[k, m]] / s;
        acc += params.p[[k, m + 1]] * rate * (-rate * y).exp();
    }
    acc
}

/// Discretized state-level pmf at grid index `j` given a precomputed scale.
#[inline]
pub(crate) fn state_pmf_discretized(
    j: u64,
    k: usize,
    s: f64,
    resolution: f64,
    params: &ModelParams,
) -> f64 {
    let mut acc = if j == 0 { params.p[[k, 0]] } else { 0.0 };
    for m in 0..params.hyper.m - 1 {
        let x = resolution * params.lambda[[k, m]] / s;
        // geometric: (1 - e^{-x}) e^{-x j}
        acc += params.p[[k, m + 1]] * (-(-x).exp_m1()) * (-x * j as f64).exp();
    }
    acc
}

/// Per-component density/pmf used when splitting posteriors into mixture
/// responsibilities. Component 0 is the dry atom.
#[inline]
pub(crate) fn component_emission(
    y: f64,
    k: usize,
    component: usize,
    s: f64,
    params: &ModelParams,
) -> f64 {
    match params.hyper.mode {
        EmissionMode::Continuous => {
            if component == 0 {
                if y == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else if y > 0.0 {
                let rate = params.lambda[[k, component - 1]] / s;
                rate * (-rate * y).exp()
            } else {
                0.0
            }
        }
        EmissionMode::Discretized { resolution } => {
            let j = (y / resolution).round();
            if component == 0 {
                if j == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let x = resolution * params.lambda[[k, component - 1]] / s;
                (-(-x).exp_m1()) * (-x * j).exp()
            }
        }
    }
}

/// Solves `pi Q = pi`, `sum pi = 1` for an irreducible row-stochastic matrix.
///
/// Uses a direct linear solve with the normalization row appended; falls back
/// to power iteration (tolerance 1e-13, at most 1e5 iterations) when the
/// solve is unsatisfactory.
pub fn stationary_distribution(q: &Array2<f64>) -> Result<Vec<f64>> {
    let k = q.nrows();
    if q.ncols() != k || k == 0 {
        return Err(Error::DimensionMismatch(format!(
            "transition matrix is {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    for row in 0..k {
        let sum: f64 = q.row(row).sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "transition row {} sums to {sum}, not 1",
                row + 1
            )));
        }
        if q.row(row).iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!("transition row {} has a negative entry", row + 1)));
        }
    }
    if !strongly_connected(q) {
        return Err(Error::ReducibleChain);
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }

    // (Q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = q[[j, i]] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    if let Some(sol) = a.lu().solve(&b) {
        let mut pi: Vec<f64> = sol.iter().cloned().collect();
        // Clamp solver noise; irreducibility guarantees strict positivity.
        for v in pi.iter_mut() {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        let total: f64 = pi.iter().sum();
        if total > 0.0 {
            for v in pi.iter_mut() {
                *v /= total;
            }
            if stationary_residual(&pi, q) < 1e-12 && pi.iter().all(|&v| v >= 0.0) {
                return Ok(pi);
            }
        }
    }

    // Power iteration fallback.
    let mut pi = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..100_000 {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (i, &pi_i) in pi.iter().enumerate() {
            for j in 0..k {
                next[j] += pi_i * q[[i, j]];
            }
        }
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
        let delta = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-13 {
            return Ok(pi);
        }
    }
    Err(Error::StationaryNonConvergence(format!(
        "power iteration residual {:.3e} after 1e5 iterations",
        stationary_residual(&pi, q)
    )))
}

fn stationary_residual(pi: &[f64], q: &Array2<f64>) -> f64 {
    let k = pi.len();
    let mut worst = 0.0f64;
    for j in 0..k {
        let mut acc = 0.0;
        for i in 0..k {
            acc += pi[i] * q[[i, j]];
        }
        worst = worst.max((acc - pi[j]).abs());
    }
    worst
}

/// Strong connectivity of the positive-entry graph via boolean closure.
fn strongly_connected(q: &Array2<f64>) -> bool {
    let k = q.nrows();
    let mut reach = vec![vec![false; k]; k];
    for i in 0..k {
        reach[i][i] = true;
        for j in 0..k {
            if q[[i, j]] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for mid in 0..k {
        for i in 0..k {
            if reach[i][mid] {
                for j in 0..k {
                    if reach[mid][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach.iter().all(|row| row.iter().all(|&r| r))
}

/// Checks every structural invariant of a parameter vector and, when bounds
/// are supplied, the uniform boundedness constraints at every day of the
/// period. Returns the full list of violations instead of failing.
pub fn validate_params(params: &ModelParams, bounds: Option<&ParamBounds>) -> Vec<Violation> {
    let mut out = Vec::new();
    let hp = &params.hyper;
    let shapes = [
        ("Q", (hp.k, hp.k), params.q.dim()),
        ("p", (hp.k, hp.m), params.p.dim()),
        ("lambda", (hp.k, hp.m - 1), params.lambda.dim()),
        ("beta", (hp.k, 2 * hp.d), params.beta.dim()),
    ];
    for (field, expected, got) in shapes {
        if expected != got {
            out.push(Violation::BadShape { field, expected, got });
        }
    }
    if !out.is_empty() {
        return out; // entry checks below assume correct shapes
    }

    for k in 0..hp.k {
        let q_sum: f64 = params.q.row(k).sum();
        if (q_sum - 1.0).abs() > ROW_SUM_TOL {
            out.push(Violation::QRowSum { state: k, sum: q_sum });
        }
        for (j, &v) in params.q.row(k).iter().enumerate() {
            if v < 0.0 {
                out.push(Violation::QNegativeEntry { state: k, col: j, value: v });
            }
        }
        let p_sum: f64 = params.p.row(k).sum();
        if (p_sum - 1.0).abs() > ROW_SUM_TOL {
            out.push(Violation::PRowSum { state: k, sum: p_sum });
        }
        for (m, &v) in params.p.row(k).iter().enumerate() {
            if v < 0.0 {
                out.push(Violation::PNegativeEntry { state: k, component: m, value: v });
            }
        }
        for (m, &v) in params.lambda.row(k).iter().enumerate() {
            if !(v > 0.0) {
                out.push(Violation::LambdaNonPositive { state: k, component: m, value: v });
            }
        }
        for day in 1..=hp.t {
            let s = seasonal_scale(day, params.beta.row(k), hp);
            if !(s > 0.0) {
                out.push(Violation::ScaleNonPositive { state: k, day, value: s });
            }
        }
    }

    if let Some(b) = bounds {
        for k in 0..hp.k {
            for (j, &v) in params.q.row(k).iter().enumerate() {
                if v < b.delta {
                    out.push(Violation::BoundDelta { state: k, col: j, value: v, delta: b.delta });
                }
            }
            for (m, &v) in params.lambda.row(k).iter().enumerate() {
                if v < b.lambda_min || v > b.lambda_max {
                    out.push(Violation::BoundLambda { state: k, component: m, value: v });
                }
            }
            for day in 1..=hp.t {
                let s = seasonal_scale(day, params.beta.row(k), hp);
                if s < b.sigma_min || s > b.sigma_max {
                    out.push(Violation::BoundScale { state: k, day, value: s });
                }
            }
        }
        let dry_sum: f64 = (0..hp.k).map(|k| params.p[[k, 0]]).sum();
        if dry_sum < b.p_bar_min {
            out.push(Violation::BoundDrySum { sum: dry_sum, p_bar_min: b.p_bar_min });
        }
    }
    out
}
