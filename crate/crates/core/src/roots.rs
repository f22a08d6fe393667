//! Bracketed scalar root finding.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct RootOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 200 }
    }
}

/// Find a root of `f` inside [a, b] with a bisection-secant hybrid.
///
/// The bracket must change sign. Each step proposes a secant point; if it
/// falls outside the current bracket or fails to shrink it fast enough the
/// step falls back to bisection, so convergence is guaranteed for any
/// continuous sign-changing function.
pub fn bracketed_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: &RootOptions) -> Result<f64> {
    if !(b > a) {
        return Err(CoreError::InvalidInput(format!("bracketed_root: bad bracket [{a}, {b}]")));
    }
    let mut lo = a;
    let mut hi = b;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::ModelInvalid(format!(
            "bracketed_root: no sign change on [{a}, {b}] (f = {flo:.3e}, {fhi:.3e})"
        )));
    }

    for _ in 0..opts.max_iter {
        let width = hi - lo;
        let scale = lo.abs().max(hi.abs()).max(1e-300);
        if width <= opts.rel_tol * scale {
            return Ok(0.5 * (lo + hi));
        }
        // Secant proposal, clamped away from the bracket edges.
        let mut x = lo - flo * (hi - lo) / (fhi - flo);
        let margin = 0.01 * width;
        if !(x > lo + margin && x < hi - margin) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expand an initial guess geometrically until `f` changes sign, then solve.
///
/// Suited to monotone functions on (0, ∞) such as entropy derivatives.
pub fn positive_axis_root<F: FnMut(f64) -> f64>(mut f: F, guess: f64, opts: &RootOptions) -> Result<f64> {
    let mut lo = guess.max(1e-300);
    let mut hi = lo;
    let f_guess = f(lo);
    if f_guess == 0.0 {
        return Ok(lo);
    }
    let mut expanded = false;
    for _ in 0..2000 {
        if f_guess > 0.0 {
            hi *= 2.0;
            if f(hi) <= 0.0 {
                expanded = true;
                lo = hi / 2.0;
                break;
            }
        } else {
            lo /= 2.0;
            if f(lo) >= 0.0 {
                expanded = true;
                hi = lo * 2.0;
                break;
            }
        }
    }
    if !expanded {
        return Err(CoreError::ModelInvalid(
            "positive_axis_root: could not bracket a root on (0, ∞)".into(),
        ));
    }
    bracketed_root(f, lo, hi, opts)
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_minimum<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_width: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo) > rel_width * lo.abs().max(hi.abs()).max(1e-300) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    if f1 < fm && f1 < f2 {
        (x1, f1)
    } else if f2 < fm {
        (x2, f2)
    } else {
        (xm, fm)
    }
}
