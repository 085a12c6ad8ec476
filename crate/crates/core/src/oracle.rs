//! Brute-force reference implementations backing the test suites.
//!
//! Everything here recomputes model quantities from first principles —
//! exhaustive path enumeration instead of forward-backward, quadrature
//! instead of closed forms — so the fast implementations can be checked
//! against an independent route. Compiled only for tests (feature `oracle`);
//! not part of the supported API.

use ndarray::{Array2, Array3};
use rand::Rng;

use crate::model::{EmissionMode, HyperParams, ModelParams, SeriesData};

/// Composite Simpson quadrature with `2n` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let steps = 2 * n;
    let h = (b - a) / steps as f64;
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Seasonal scale evaluated directly from the definition.
pub fn scale_direct(t: usize, beta_k: &[f64], d: usize, period: usize) -> f64 {
    let mut s = 1.0;
    for l in 1..=d {
        let angle = 2.0 * std::f64::consts::PI * l as f64 * t as f64 / period as f64;
        s += beta_k[2 * l - 2] * angle.cos() + beta_k[2 * l - 1] * angle.sin();
    }
    s
}

/// Emission weight `f_{km,t}(y)` of one mixture component (component 0 is the
/// dry atom), written out from the definitions.
pub fn component_weight(params: &ModelParams, k: usize, component: usize, t: usize, y: f64) -> f64 {
    let hp = &params.hyper;
    let beta_k: Vec<f64> = params.beta.row(k).to_vec();
    let s = scale_direct((t - 1) % hp.t + 1, &beta_k, hp.d, hp.t);
    match hp.mode {
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
                (1.0 - (-x).exp()) * (-x * j).exp()
            }
        }
    }
}

/// Mixture-marginal emission density of state `k`.
pub fn state_weight(params: &ModelParams, k: usize, t: usize, y: f64) -> f64 {
    (0..params.hyper.m)
        .map(|m| params.p[[k, m]] * component_weight(params, k, m, t, y))
        .sum()
}

/// Posteriors and likelihood computed by exhaustive enumeration of all
/// `(K*M)^n` joint label paths.
pub struct EnumPosteriors {
    pub loglik: f64,
    pub smoothing: Array2<f64>,
    pub pair_smoothing: Array3<f64>,
    pub responsibilities: Array3<f64>,
}

pub fn enumerate_posteriors(params: &ModelParams, pi: &[f64], data: &SeriesData) -> EnumPosteriors {
    let n = data.n();
    let k_n = params.hyper.k;
    let m_n = params.hyper.m;
    let labels = k_n * m_n;
    assert!(
        (labels as f64).powi(n as i32) < 5e7,
        "enumeration too large: {labels}^{n}"
    );

    let mut total = 0.0f64;
    let mut smoothing = Array2::<f64>::zeros((n, k_n));
    let mut pair = Array3::<f64>::zeros((n.saturating_sub(1), k_n, k_n));
    let mut resp = Array3::<f64>::zeros((n, k_n, m_n));

    let mut path = vec![0usize; n]; // joint label index k*m_n + m per step
    loop {
        // weight of this labelled path
        let mut w = 1.0f64;
        for (t, &label) in path.iter().enumerate() {
            let (k, m) = (label / m_n, label % m_n);
            let day = data.day_of_year[t] as usize;
            w *= params.p[[k, m]] * component_weight(params, k, m, day, data.values[t]);
            if t == 0 {
                w *= pi[k];
            } else {
                let prev_k = path[t - 1] / m_n;
                w *= params.q[[prev_k, k]];
            }
            if w == 0.0 {
                break;
            }
        }
        if w != 0.0 {
            total += w;
            for (t, &label) in path.iter().enumerate() {
                let (k, m) = (label / m_n, label % m_n);
                smoothing[[t, k]] += w;
                resp[[t, k, m]] += w;
                if t + 1 < n {
                    let next_k = path[t + 1] / m_n;
                    pair[[t, k, next_k]] += w;
                }
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                let loglik = total.ln();
                smoothing /= total;
                pair /= total;
                resp /= total;
                return EnumPosteriors { loglik, smoothing, pair_smoothing: pair, responsibilities: resp };
            }
            path[pos] += 1;
            if path[pos] < labels {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

/// Log joint probability of a state path (mixture labels marginalized out).
pub fn path_log_joint(params: &ModelParams, pi: &[f64], data: &SeriesData, path: &[usize]) -> f64 {
    let mut acc = 0.0f64;
    for (t, &k) in path.iter().enumerate() {
        let day = data.day_of_year[t] as usize;
        let f = state_weight(params, k, day, data.values[t]);
        acc += f.ln();
        acc += if t == 0 { pi[k].ln() } else { params.q[[path[t - 1], k]].ln() };
    }
    acc
}

/// Exhaustive Viterbi: the maximizing state path, ties resolved by
/// right-to-left lexicographic minimality (last state smallest, then the one
/// before, ...), matching the decoder's documented backtracking rule.
pub fn enumerate_viterbi(params: &ModelParams, pi: &[f64], data: &SeriesData) -> Vec<usize> {
    let n = data.n();
    let k_n = params.hyper.k;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_paths: Vec<Vec<usize>> = Vec::new();

    let mut path = vec![0usize; n];
    loop {
        let score = path_log_joint(params, pi, data, &path);
        if score > best_score {
            best_score = score;
            best_paths = vec![path.clone()];
        } else if score == best_score && score > f64::NEG_INFINITY {
            best_paths.push(path.clone());
        }
        let mut pos = 0;
        loop {
            if pos == n {
                assert!(!best_paths.is_empty(), "all paths have zero probability");
                best_paths.sort_by(|a, b| {
                    a.iter().rev().cmp(b.iter().rev())
                });
                return best_paths[0].clone();
            }
            path[pos] += 1;
            if path[pos] < k_n {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

/// Random valid model parameters for property tests.
///
/// `separated` makes rates and dry probabilities well spread across states,
/// which the spectral linear-independence assumption needs.
pub fn random_params(
    rng: &mut impl Rng,
    k: usize,
    m: usize,
    d: usize,
    t: usize,
    mode: EmissionMode,
    separated: bool,
) -> ModelParams {
    let hyper = HyperParams::new(k, m, d, t, mode).unwrap();
    let mut q = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        let mut row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
        row[i] += 1.0;
        let s: f64 = row.iter().sum();
        for (j, v) in row.iter().enumerate() {
            q[[i, j]] = v / s;
        }
    }
    let mut p = Array2::<f64>::zeros((k, m));
    let mut lambda = Array2::<f64>::zeros((k, m - 1));
    for i in 0..k {
        let dry = if separated {
            0.15 + 0.7 * i as f64 / k.max(1) as f64
        } else {
            rng.gen_range(0.05..0.9)
        };
        p[[i, 0]] = dry;
        let mut wet: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(0.3..1.0)).collect();
        let ws: f64 = wet.iter().sum();
        for (j, w) in wet.iter_mut().enumerate() {
            *w *= (1.0 - dry) / ws;
            p[[i, j + 1]] = *w;
        }
        for j in 0..m - 1 {
            let base = if separated {
                // distinct rates across every (state, component) pair
                0.3 * 1.9f64.powi((i * (m - 1) + j) as i32)
            } else {
                rng.gen_range(0.1..8.0)
            };
            lambda[[i, j]] = base * rng.gen_range(0.95..1.05);
        }
        let mut row: Vec<f64> = lambda.row(i).to_vec();
        row.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (j, v) in row.into_iter().enumerate() {
            lambda[[i, j]] = v;
        }
    }
    let mut beta = Array2::<f64>::zeros((k, 2 * d));
    if d > 0 {
        for i in 0..k {
            // keep |Z beta| well below 1 so the scale stays positive
            let budget = 0.6 / (2 * d) as f64;
            for j in 0..2 * d {
                beta[[i, j]] = rng.gen_range(-budget..budget);
            }
        }
    }
    ModelParams::new(hyper, q, p, lambda, beta).expect("constructed parameters are valid")
}

/// Random observation sequence (not drawn from any particular model): a mix
/// of dry days and positive values, snapped to the grid in discretized mode.
pub fn random_series(rng: &mut impl Rng, hyper: &HyperParams, n: usize) -> SeriesData {
    let values: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.4) {
                0.0
            } else {
                let y: f64 = rng.gen_range(0.05..6.0);
                match hyper.mode {
                    EmissionMode::Continuous => y,
                    EmissionMode::Discretized { resolution } => (y / resolution).floor() * resolution,
                }
            }
        })
        .collect();
    SeriesData::cyclic(values, hyper.t, "oracle").unwrap()
}

/// All permutations of `0..k` (k <= 8).
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    assert!(k <= 8);
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..k).collect(), &mut out);
    out
}

/// Permutation `perm` minimizing `sum_k cost(k, perm[k])`, by exhaustive
/// search; `perm[k]` maps a reference state to a candidate state.
pub fn best_permutation(k: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut best = (f64::INFINITY, Vec::new());
    for perm in permutations(k) {
        let c: f64 = (0..k).map(|i| cost(i, perm[i])).sum();
        if c < best.0 {
            best = (c, perm);
        }
    }
    best.1
}
