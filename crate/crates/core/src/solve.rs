//! Scalar root finding: bracketed bisection with an optional Newton
//! acceleration step.
//!
//! Every inversion in this crate (free-energy tilt, Cramér tilt, zero-cost
//! velocities, urn fixed points) reduces to a one-dimensional root of a
//! monotone or at least sign-bracketed function, so a single safeguarded
//! solver covers all of them.

use crate::math;

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    /// Final abscissa.
    pub x: f64,
    /// Residual `f(x)` at the final abscissa.
    pub residual: f64,
    /// Iterations consumed.
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` assuming `f(lo)` and `f(hi)` have opposite signs
/// (either orientation; exact zeros at the endpoints are returned directly).
///
/// Runs until the bracket width drops below `tol_x` or `max_iter` halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol_x: f64, max_iter: usize) -> Root {
    let mut flo = f(lo);
    if flo == 0.0 {
        return Root { x: lo, residual: 0.0, iterations: 0 };
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Root { x: hi, residual: 0.0, iterations: 0 };
    }
    let mut iterations = 0;
    let mut mid = 0.5 * (lo + hi);
    let mut fmid = f(mid);
    while iterations < max_iter && (hi - lo) > tol_x {
        if fmid == 0.0 {
            break;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        fmid = f(mid);
        iterations += 1;
    }
    Root { x: mid, residual: fmid, iterations }
}

/// Newton iteration safeguarded by a sign-change bracket.
///
/// `f` must bracket a root on `[lo, hi]` (`f(lo) ≤ 0 ≤ f(hi)` up to
/// orientation). Newton steps that leave the bracket, or that fail to
/// shrink `|f|`, fall back to bisection, so the bracket never degrades.
pub fn newton_bisect<F, D>(mut f: F, mut df: D, mut lo: f64, mut hi: f64, tol_x: f64, max_iter: usize) -> Root
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    if f(lo) == 0.0 {
        return Root { x: lo, residual: 0.0, iterations: 0 };
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Root { x: hi, residual: 0.0, iterations: 0 };
    }
    let rising = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        if fx == 0.0 || (hi - lo) <= tol_x {
            break;
        }
        // Keep the bracket current.
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let mut next = if d != 0.0 && d.is_finite() { x - fx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let fnext = f(next);
        if math::abs(fnext) > math::abs(fx) {
            // Newton overshot; take the midpoint instead.
            let mid = 0.5 * (lo + hi);
            x = mid;
            fx = f(mid);
        } else {
            x = next;
            fx = fnext;
        }
    }
    Root { x, residual: fx, iterations }
}

/// Grows a symmetric bracket `[-b, b]` until an increasing `f` changes sign
/// across it. Returns the bracket; callers guarantee a root exists.
pub fn bracket_increasing<F: FnMut(f64) -> f64>(mut f: F, init: f64, max_doublings: usize) -> (f64, f64) {
    let mut b = if init > 0.0 { init } else { 1.0 };
    for _ in 0..max_doublings {
        if f(-b) <= 0.0 && f(b) >= 0.0 {
            return (-b, b);
        }
        b *= 2.0;
    }
    (-b, b)
}
