//! Small numeric helpers shared across modules.

/// `ln(1 - exp(-x))` for `x > 0`, stable for both tiny and large `x`.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// Empirical quantile with linear interpolation of order statistics
/// (the R type-7 rule): `h = (n-1)p`, result `x[floor(h)] + frac(h) *
/// (x[floor(h)+1] - x[floor(h)])` on ascending-sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "probability outside [0,1]");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}
