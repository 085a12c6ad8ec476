//! Quasi-Newton maximizer for the emission M-step.
//!
//! Plain BFGS with Armijo backtracking on a handful of parameters (the
//! rates and trigonometric coefficients of one state). The objective
//! returns `None` outside the feasible region (seasonal scale at or below
//! its floor), which the line search treats as minus infinity.

/// Result of one maximization run.
pub(crate) struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// False when the starting point itself was infeasible.
    pub started: bool,
}

/// Maximizes `f` starting from `x0`. `f` returns the value and gradient, or
/// `None` when infeasible.
pub(crate) fn maximize(
    f: &mut dyn FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: &[f64],
    max_evals: usize,
) -> OptimOutcome {
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> Option<(f64, Vec<f64>)> {
        *evals += 1;
        f(x)
    };

    let Some((mut fx, mut grad)) = eval(x0, &mut evals) else {
        return OptimOutcome { x: x0.to_vec(), value: f64::NEG_INFINITY, evals, started: false };
    };
    let mut x = x0.to_vec();
    if dim == 0 {
        return OptimOutcome { x, value: fx, evals, started: true };
    }

    // inverse Hessian approximation, identity to start
    let mut h = vec![0.0f64; dim * dim];
    for i in 0..dim {
        h[i * dim + i] = 1.0;
    }

    let gtol = 1e-9;
    while evals < max_evals {
        let gnorm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm < gtol {
            break;
        }
        // ascent direction p = H g
        let mut p = vec![0.0f64; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += h[i * dim + j] * grad[j];
            }
            p[i] = acc;
        }
        let mut slope: f64 = p.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if slope <= 0.0 {
            // H lost positive definiteness; reset to steepest ascent
            for i in 0..dim {
                for j in 0..dim {
                    h[i * dim + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            p.copy_from_slice(&grad);
            slope = grad.iter().map(|g| g * g).sum();
        }

        // backtracking line search (Armijo, c1 = 1e-4)
        let mut step = 1.0f64;
        let mut accepted: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        while evals < max_evals {
            let cand: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + step * pi).collect();
            if let Some((fc, gc)) = eval(&cand, &mut evals) {
                if fc >= fx + 1e-4 * step * slope {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };

        // BFGS update of the inverse Hessian
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // y = grad_old - grad_new keeps the update positive for maximization
        let y: Vec<f64> = grad.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm && sy.is_finite() {
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = vec![0.0f64; dim];
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..dim {
                    acc += h[i * dim + j] * y[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                for j in 0..dim {
                    h[i * dim + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        let progress = f_new - fx;
        x = x_new;
        fx = f_new;
        grad = g_new;
        if progress.abs() < 1e-12 * (1.0 + fx.abs()) {
            break;
        }
    }

    OptimOutcome { x, value: fx, evals, started: true }
}
