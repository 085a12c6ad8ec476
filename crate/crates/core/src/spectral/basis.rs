//! Orthonormal basis of `L^2(R_+, delta_0 + Lebesgue)`.
//!
//! The first basis function is the indicator of the atom at zero; the rest
//! are normalized indicators of equal-width bins covering `(0, y_max]`.
//! This choice makes every inner product with an exponential-mixture
//! emission law closed-form.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{EmissionMode, ModelParams, SeasonTable};

/// Basis specification: `n` functions, the atom plus `n - 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    n: usize,
    y_max: f64,
    /// Bin edges `0 = e_0 < e_1 < ... < e_{n-1} = y_max`; bin `j` is
    /// `(e_j, e_{j+1}]`.
    edges: Vec<f64>,
}

/// Builds the atom-plus-histogram basis with `n >= 2` functions.
pub fn build_basis(n: usize, y_max: f64) -> Result<BasisSpec> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("basis needs n >= 2 functions, got {n}")));
    }
    if !(y_max > 0.0) || !y_max.is_finite() {
        return Err(Error::InvalidInput(format!("y_max must be positive and finite, got {y_max}")));
    }
    let bins = n - 1;
    let edges = (0..=bins).map(|j| y_max * j as f64 / bins as f64).collect();
    Ok(BasisSpec { n, y_max, edges })
}

impl BasisSpec {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bin_width(&self) -> f64 {
        self.y_max / (self.n - 1) as f64
    }

    /// The single basis function that is non-zero at `y`, as
    /// `(index, value)`; `None` when `y > y_max` (all functions vanish).
    pub fn index_weight(&self, y: f64) -> Option<(usize, f64)> {
        if y == 0.0 {
            return Some((0, 1.0));
        }
        if y < 0.0 || y > self.y_max {
            return None;
        }
        let h = self.bin_width();
        let j = (y / h).ceil() as usize - 1;
        let j = j.min(self.n - 2);
        Some((j + 1, 1.0 / h.sqrt()))
    }

    /// Evaluates `phi_a(y)`.
    pub fn evaluate(&self, a: usize, y: f64) -> f64 {
        match self.index_weight(y) {
            Some((idx, w)) if idx == a => w,
            _ => 0.0,
        }
    }

    /// Gram matrix under `delta_0 + Lebesgue`, from the analytic overlap
    /// integrals. Identity by construction; exposed for the orthonormality
    /// check.
    pub fn gram(&self) -> Array2<f64> {
        let mut g = Array2::<f64>::zeros((self.n, self.n));
        g[[0, 0]] = 1.0; // atom integrates against itself with mass 1
        let h = self.bin_width();
        for i in 1..self.n {
            for j in 1..self.n {
                // overlap of bins (i-1) and (j-1), scaled by h^{-1}
                let lo = self.edges[i - 1].max(self.edges[j - 1]);
                let hi = self.edges[i].min(self.edges[j]);
                if hi > lo {
                    g[[i, j]] = (hi - lo) / h;
                }
            }
        }
        g
    }
}

/// Analytic projections `O_t(a, k) = E[phi_a(Y_t) | X_t = k]` of the
/// emission laws on the basis, as an `n x K` matrix.
pub fn emission_projection(params: &ModelParams, t: usize, basis: &BasisSpec) -> Array2<f64> {
    let season = SeasonTable::new(params);
    emission_projection_with_table(params, &season, t, basis)
}

pub(crate) fn emission_projection_with_table(
    params: &ModelParams,
    season: &SeasonTable,
    t: usize,
    basis: &BasisSpec,
) -> Array2<f64> {
    let hp = &params.hyper;
    let mut o = Array2::<f64>::zeros((basis.n(), hp.k));
    let h_inv_sqrt = 1.0 / basis.bin_width().sqrt();
    for k in 0..hp.k {
        let s = season.scale(k, t);
        match hp.mode {
            EmissionMode::Continuous => {
                o[[0, k]] = params.p[[k, 0]];
                for m in 0..hp.m - 1 {
                    let rate = params.lambda[[k, m]] / s;
                    let w = params.p[[k, m + 1]];
                    for j in 0..basis.n() - 1 {
                        let mass = (-rate * basis.edges[j]).exp() - (-rate * basis.edges[j + 1]).exp();
                        o[[j + 1, k]] += w * mass * h_inv_sqrt;
                    }
                }
            }
            EmissionMode::Discretized { resolution } => {
                // survival of the floored value past x: q^{floor(x/res)+1}
                let grid_steps = |x: f64| ((x / resolution) + 1e-9).floor() + 1.0;
                o[[0, k]] = params.p[[k, 0]];
                for m in 0..hp.m - 1 {
                    let q = (-resolution * params.lambda[[k, m]] / s).exp();
                    let w = params.p[[k, m + 1]];
                    o[[0, k]] += w * (1.0 - q);
                    for j in 0..basis.n() - 1 {
                        let lo = basis.edges[j];
                        let hi = basis.edges[j + 1];
                        let mass = q.powf(grid_steps(lo)) - q.powf(grid_steps(hi));
                        o[[j + 1, k]] += w * mass * h_inv_sqrt;
                    }
                }
            }
        }
    }
    o
}
