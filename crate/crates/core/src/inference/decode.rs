//! MAP and Viterbi state decoding.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{ModelParams, SeriesData};

use super::forward_backward::emission_table;
use super::PosteriorSet;

/// Most likely state sequence under the joint law, starting from the
/// stationary distribution, with mixture labels marginalized inside each
/// state's emission density.
///
/// States are 0-based. Ties are broken towards the right-to-left
/// lexicographically smallest path: the final state is the lowest-index
/// maximizer, and each backpointer picks the lowest-index predecessor among
/// maximizers.
pub fn viterbi(params: &ModelParams, data: &SeriesData) -> Result<Vec<usize>> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let dens = emission_table(params, data)?;
    let pi = params.stationary()?;
    let (n, k_n) = dens.dim();

    let log_q: Array2<f64> = params.q.mapv(f64::ln);
    let mut delta = vec![0.0f64; k_n];
    let mut backptr = Array2::<usize>::zeros((n, k_n));

    for k in 0..k_n {
        delta[k] = pi[k].ln() + dens[[0, k]].ln();
    }
    if delta.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::DegenerateLikelihood { index: 0 });
    }
    for t in 1..n {
        let mut next = vec![f64::NEG_INFINITY; k_n];
        for k in 0..k_n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for l in 0..k_n {
                let cand = delta[l] + log_q[[l, k]];
                if cand > best {
                    best = cand;
                    arg = l;
                }
            }
            next[k] = best + dens[[t, k]].ln();
            backptr[[t, k]] = arg;
        }
        if next.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::DegenerateLikelihood { index: t });
        }
        delta = next;
    }

    let mut last = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (k, &v) in delta.iter().enumerate() {
        if v > best {
            best = v;
            last = k;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = backptr[[t, path[t]]];
    }
    Ok(path)
}

/// Per-time maximum a posteriori states from smoothing probabilities,
/// 0-based, ties to the lowest index.
pub fn map_states(post: &PosteriorSet) -> Vec<usize> {
    let (n, k_n) = post.smoothing.dim();
    (0..n)
        .map(|t| {
            let mut arg = 0usize;
            let mut best = f64::NEG_INFINITY;
            for k in 0..k_n {
                let v = post.smoothing[[t, k]];
                if v > best {
                    best = v;
                    arg = k;
                }
            }
            arg
        })
        .collect()
}
