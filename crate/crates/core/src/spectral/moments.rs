//! Moment tensors of a triple of consecutive observations.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SeasonTable};

use super::basis::{emission_projection_with_table, BasisSpec};

/// First, second and third order moments of `(Y_{t-1}, Y_t, Y_{t+1})`
/// projected on the basis.
#[derive(Debug, Clone)]
pub struct MomentSet {
    /// Center day of the triple.
    pub t: usize,
    pub basis: BasisSpec,
    /// `l[a] = E[phi_a(Y_t)]`.
    pub l: Array1<f64>,
    /// `m3[a, b, c] = E[phi_a(Y_{t-1}) phi_b(Y_t) phi_c(Y_{t+1})]`.
    pub m3: Array3<f64>,
    /// `n2[a, b] = E[phi_a(Y_t) phi_b(Y_{t+1})]`.
    pub n2: Array2<f64>,
    /// `p2[a, c] = E[phi_a(Y_{t-1}) phi_c(Y_{t+1})]`.
    pub p2: Array2<f64>,
}

/// Population moments computed from the model law.
///
/// The tensors are assembled from the joint law of the hidden state at the
/// center day: conditionally on `X_t = k`, the three observations are
/// independent with marginal projections given by the (analytic) emission
/// projections at days `t-1`, `t`, `t+1`.
pub fn exact_moments(params: &ModelParams, t: usize, basis: &BasisSpec) -> Result<MomentSet> {
    if t < 2 {
        return Err(Error::InvalidInput(format!("exact moments need t >= 2, got {t}")));
    }
    let violations = crate::model::validate_params(params, None);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let k_n = params.hyper.k;
    let n = basis.n();
    let season = SeasonTable::new(params);
    let o_prev = emission_projection_with_table(params, &season, t - 1, basis);
    let o_mid = emission_projection_with_table(params, &season, t, basis);
    let o_next = emission_projection_with_table(params, &season, t + 1, basis);
    let pi = params.stationary()?;

    // u_k[a] = E[phi_a(Y_{t-1}) 1{X_t = k}], v_k[c] = E[phi_c(Y_{t+1}) | X_t = k]
    let mut u = Array2::<f64>::zeros((k_n, n));
    let mut v = Array2::<f64>::zeros((k_n, n));
    for k in 0..k_n {
        for a in 0..n {
            let mut acc_u = 0.0;
            let mut acc_v = 0.0;
            for j in 0..k_n {
                acc_u += pi[j] * params.q[[j, k]] * o_prev[[a, j]];
                acc_v += params.q[[k, j]] * o_next[[a, j]];
            }
            u[[k, a]] = acc_u;
            v[[k, a]] = acc_v;
        }
    }

    let mut l = Array1::<f64>::zeros(n);
    for a in 0..n {
        for k in 0..k_n {
            l[a] += pi[k] * o_mid[[a, k]];
        }
    }
    let mut n2 = Array2::<f64>::zeros((n, n));
    let mut p2 = Array2::<f64>::zeros((n, n));
    let mut m3 = Array3::<f64>::zeros((n, n, n));
    for k in 0..k_n {
        for a in 0..n {
            let ua = u[[k, a]];
            let pa = pi[k] * o_mid[[a, k]];
            for c in 0..n {
                let vc = v[[k, c]];
                p2[[a, c]] += ua * vc;
                n2[[a, c]] += pa * vc;
            }
            if ua != 0.0 {
                for b in 0..n {
                    let ob = o_mid[[b, k]];
                    if ob == 0.0 {
                        continue;
                    }
                    for c in 0..n {
                        m3[[a, b, c]] += ua * ob * v[[k, c]];
                    }
                }
            }
        }
    }

    Ok(MomentSet { t, basis: basis.clone(), l, m3, n2, p2 })
}

/// Empirical moments from yearly replicates.
///
/// `years` is a year-by-day matrix (each row one period of `T` days). For a
/// center day `t`, every triple `(Y_{t-1}, Y_t, Y_{t+1})` available in the
/// flattened record contributes one replicate; triples at the period
/// boundary (`t = 1` or `t = T`) wrap into the neighbouring year, which
/// leaves `years - 1` replicates for those days.
pub fn empirical_moments(
    years: &Array2<f64>,
    t: usize,
    basis: &BasisSpec,
) -> Result<MomentSet> {
    let (n_years, period) = years.dim();
    if n_years == 0 || period == 0 {
        return Err(Error::InvalidInput("empty replicate set".into()));
    }
    if t < 1 || t > period {
        return Err(Error::InvalidInput(format!("day {t} outside 1..={period}")));
    }
    let n = basis.n();
    let total = n_years * period;
    let flat_at = |idx: usize| years[[idx / period, idx % period]];

    let mut l = Array1::<f64>::zeros(n);
    let mut m3 = Array3::<f64>::zeros((n, n, n));
    let mut n2 = Array2::<f64>::zeros((n, n));
    let mut p2 = Array2::<f64>::zeros((n, n));
    let mut count = 0usize;

    for year in 0..n_years {
        let center = year * period + (t - 1);
        if center == 0 || center + 1 >= total {
            continue;
        }
        count += 1;
        let w1 = basis.index_weight(flat_at(center - 1));
        let w2 = basis.index_weight(flat_at(center));
        let w3 = basis.index_weight(flat_at(center + 1));
        if let Some((b, wb)) = w2 {
            l[b] += wb;
            if let Some((c, wc)) = w3 {
                n2[[b, c]] += wb * wc;
            }
        }
        if let Some((a, wa)) = w1 {
            if let Some((c, wc)) = w3 {
                p2[[a, c]] += wa * wc;
                if let Some((b, wb)) = w2 {
                    m3[[a, b, c]] += wa * wb * wc;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidInput(format!(
            "no complete triples centered on day {t} (need at least two years for boundary days)"
        )));
    }
    let inv = 1.0 / count as f64;
    l *= inv;
    m3 *= inv;
    n2 *= inv;
    p2 *= inv;
    Ok(MomentSet { t, basis: basis.clone(), l, m3, n2, p2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EmissionMode, HyperParams};
    use crate::oracle;
    use crate::spectral::basis::{build_basis, emission_projection};
    use ndarray::array;

    #[test]
    fn single_state_moments_factorize() {
        let hyper = HyperParams::new(1, 2, 1, 12, EmissionMode::Continuous).unwrap();
        let params = ModelParams::new(
            hyper,
            array![[1.0]],
            array![[0.4, 0.6]],
            array![[1.5]],
            array![[0.2, -0.1]],
        )
        .unwrap();
        let basis = build_basis(6, 8.0).unwrap();
        let t = 4;
        let m = exact_moments(&params, t, &basis).unwrap();
        let op = emission_projection(&params, t - 1, &basis);
        let om = emission_projection(&params, t, &basis);
        let on = emission_projection(&params, t + 1, &basis);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    let expect = op[[a, 0]] * om[[b, 0]] * on[[c, 0]];
                    assert!((m.m3[[a, b, c]] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn atom_entry_of_l_is_mean_dry_probability() {
        let mut rng = crate::rng::stream_rng(31, 0);
        let params = oracle::random_params(&mut rng, 3, 2, 0, 12, EmissionMode::Continuous, false);
        let basis = build_basis(8, 10.0).unwrap();
        let m = exact_moments(&params, 3, &basis).unwrap();
        let pi = params.stationary().unwrap();
        let expect: f64 = (0..3).map(|k| pi[k] * params.p[[k, 0]]).sum();
        assert!((m.l[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn n2_matches_quadrature_oracle() {
        // independent route: bin masses by Simpson quadrature of the
        // emission densities instead of the closed-form integrals
        let hyper = HyperParams::new(2, 2, 1, 8, EmissionMode::Continuous).unwrap();
        let params = ModelParams::new(
            hyper,
            array![[0.7, 0.3], [0.4, 0.6]],
            array![[0.5, 0.5], [0.2, 0.8]],
            array![[2.0], [0.6]],
            array![[0.15, -0.1], [0.05, 0.2]],
        )
        .unwrap();
        let basis = build_basis(5, 6.0).unwrap();
        let t = 3;
        let m = exact_moments(&params, t, &basis).unwrap();
        let pi = params.stationary().unwrap();
        let h = basis.bin_width();

        // quadrature bin masses per state and day
        let mass = |k: usize, day: usize, a: usize| -> f64 {
            if a == 0 {
                params.p[[k, 0]]
            } else {
                let lo = basis.edges()[a - 1];
                let hi = basis.edges()[a];
                oracle::simpson(
                    |y| {
                        params.p[[k, 1]]
                            * oracle::component_weight(&params, k, 1, day, y.max(1e-300))
                    },
                    lo.max(1e-12),
                    hi,
                    20_000,
                ) / h.sqrt()
            }
        };
        for a in 0..5 {
            for b in 0..5 {
                let mut expect = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        expect += pi[k] * params.q[[k, l]] * mass(k, t, a) * mass(l, t + 1, b);
                    }
                }
                assert!(
                    (m.n2[[a, b]] - expect).abs() < 1e-6,
                    "({a},{b}): {} vs {expect}",
                    m.n2[[a, b]]
                );
            }
        }
    }

    #[test]
    fn single_replicate_is_the_raw_product() {
        let basis = build_basis(4, 3.0).unwrap();
        let years = array![[0.5, 1.2, 0.0, 2.4]];
        let m = empirical_moments(&years, 2, &basis).unwrap();
        let (a, wa) = basis.index_weight(0.5).unwrap();
        let (b, wb) = basis.index_weight(1.2).unwrap();
        let (c, wc) = basis.index_weight(0.0).unwrap();
        assert_eq!(m.m3[[a, b, c]], wa * wb * wc);
        assert_eq!(m.m3.sum(), wa * wb * wc);
        assert_eq!(m.l[b], wb);
    }

    #[test]
    fn all_dry_replicates_touch_only_atom_entries() {
        let basis = build_basis(4, 3.0).unwrap();
        let years = Array2::<f64>::zeros((5, 6));
        let m = empirical_moments(&years, 3, &basis).unwrap();
        assert_eq!(m.l[0], 1.0);
        assert_eq!(m.m3[[0, 0, 0]], 1.0);
        assert_eq!(m.n2[[0, 0]], 1.0);
        assert_eq!(m.p2[[0, 0]], 1.0);
        assert_eq!(m.m3.sum(), 1.0);
        assert_eq!(m.n2.sum(), 1.0);
    }

    #[test]
    fn boundary_days_wrap_across_years() {
        let basis = build_basis(3, 2.0).unwrap();
        let years = array![[0.1, 0.2], [0.3, 0.4]];
        // t = 1: only triple is (Y_2 of year 1, Y_1 of year 2, Y_2 of year 2)
        let m = empirical_moments(&years, 1, &basis).unwrap();
        let (a, wa) = basis.index_weight(0.2).unwrap();
        let (b, wb) = basis.index_weight(0.3).unwrap();
        let (c, wc) = basis.index_weight(0.4).unwrap();
        assert_eq!(m.m3[[a, b, c]], wa * wb * wc);
        // a single year has no wrapped triple at the boundary
        let one = array![[0.1, 0.2]];
        assert!(empirical_moments(&one, 1, &basis).is_err());
    }

    use ndarray::Array2;
}
