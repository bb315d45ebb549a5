//! The i.i.d. reference process: free energy of the uniform step, implicit
//! tilt inversion, and the Mogulskii Lagrangian.
//!
//! For i.i.d. increments uniform on `{0,…,K}`, the log moment-generating
//! function is
//!
//! ```text
//! ζ₀(β) = log(1 − e^{(K+1)β}) − log(K+1) − log(1 − e^β)
//! ```
//!
//! with `∂_βζ₀` strictly increasing from 0 to K. The rate of a velocity
//! `α` is the Legendre transform
//!
//! ```text
//! L₀(α) = α·β* − ζ₀(β*),   ∂_βζ₀(β*) = α,   ξ := e^{β*}
//! ```
//!
//! taken at the stationary point over all real `β` (the tilt `β*` is
//! negative below the midpoint `K/2` and positive above; restricting to
//! `β ≥ 0` would destroy convexity and nonnegativity of the transform).
//! Subtracting `log(K+1)` gauges the transform to the free energy instead
//! of the mgf; observables are unchanged.
//!
//! Numerics: the literal formulas are `0/0` at `β = 0`, so a fourth-order
//! cumulant expansion takes over for `|β| < 1e-4`; elsewhere `expm1` keeps
//! the ratios stable, and the reflection `ζ₀(β) = Kβ + ζ₀(−β)` maps the
//! positive axis onto the overflow-free negative one.

use crate::embedding::DiscretePath;
use crate::math;
use crate::solve;

/// Width of the series branch around `β = 0`.
const SERIES_HALF_WIDTH: f64 = 1e-4;

/// Errors from the tilt inversion.
#[derive(Debug, Clone, PartialEq)]
pub enum MogulskiiError {
    /// `ξ` degenerates to `0` or `∞` at the endpoints; only interior
    /// averages invert.
    AlphaOutOfRange { alpha: f64, capacity: usize },
}

impl core::fmt::Display for MogulskiiError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MogulskiiError::AlphaOutOfRange { alpha, capacity } => {
                write!(f, "alpha = {alpha} must lie strictly inside (0, {capacity})")
            }
        }
    }
}

/// Solution of the implicit tilt equation at a given average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiSolution {
    pub alpha: f64,
    pub capacity: usize,
    /// `ξ = e^{β*}`.
    pub xi: f64,
    /// The tilt `β* = log ξ`.
    pub beta_star: f64,
    /// Stationarity residual `|∂_βζ₀(β*) − α|` (the ξ-equation residual,
    /// evaluated in β-space where it stays finite at ξ = 1).
    pub residual: f64,
}

/// Centered moments of the uniform step on `{0,…,n−1}`, `n = K+1`.
fn cumulants(capacity: usize) -> (f64, f64, f64) {
    let n = capacity as f64 + 1.0;
    let mean = (capacity as f64) / 2.0;
    let var = (n * n - 1.0) / 12.0;
    let mu4 = (n * n - 1.0) * (3.0 * n * n - 7.0) / 240.0;
    let kappa4 = mu4 - 3.0 * var * var;
    (mean, var, kappa4)
}

/// Free energy `ζ₀(β)` of the uniform step; `ζ₀(0) = 0`,
/// `ζ₀ → −log(K+1)` as `β → −∞`, `ζ₀ ~ Kβ − log(K+1)` as `β → +∞`.
pub fn zeta0(beta: f64, capacity: usize) -> f64 {
    let k = capacity as f64;
    if math::abs(beta) < SERIES_HALF_WIDTH {
        let (mean, var, kappa4) = cumulants(capacity);
        let b2 = beta * beta;
        return mean * beta + 0.5 * var * b2 + kappa4 * b2 * b2 / 24.0;
    }
    if beta > 0.0 {
        return k * beta + zeta0(-beta, capacity);
    }
    // beta <= -1e-4: both expm1 values are negative, the ratio is positive.
    let num = math::expm1((k + 1.0) * beta);
    let den = math::expm1(beta);
    math::ln(num / den) - math::ln(k + 1.0)
}

/// Derivative `∂_βζ₀(β)`: strictly increasing, range `(0, K)`, value `K/2`
/// at `β = 0`.
pub fn dzeta0(beta: f64, capacity: usize) -> f64 {
    let k = capacity as f64;
    if math::abs(beta) < SERIES_HALF_WIDTH {
        let (mean, var, kappa4) = cumulants(capacity);
        return mean + var * beta + kappa4 * beta * beta * beta / 6.0;
    }
    if beta > 0.0 {
        return k - dzeta0(-beta, capacity);
    }
    // e^β/(1−e^β) = 1/expm1(−β); overflow of expm1 saturates the term to 0.
    1.0 / math::expm1(-beta) - (k + 1.0) / math::expm1(-(k + 1.0) * beta)
}

/// Second derivative (the tilted-step variance); used by the Newton solve.
fn ddzeta0(beta: f64, capacity: usize) -> f64 {
    let k = capacity as f64;
    if math::abs(beta) < SERIES_HALF_WIDTH {
        let (_, var, kappa4) = cumulants(capacity);
        return var + 0.5 * kappa4 * beta * beta;
    }
    // Symmetric in beta.
    let x = math::abs(beta);
    fn hump(y: f64) -> f64 {
        // e^y / expm1(y)^2, asymptotically e^{-y}.
        if y > 300.0 {
            math::exp(-y)
        } else {
            let e = math::expm1(y);
            math::exp(y) / (e * e)
        }
    }
    hump(x) - (k + 1.0) * (k + 1.0) * hump((k + 1.0) * x)
}

/// Inverts `∂_βζ₀(β*) = α` for `0 < α < K` and reports `ξ = e^{β*}`.
///
/// Bracketed bisection refined by Newton in `β`; the root is unique by
/// strict monotonicity. Residuals are driven below `1e-10`.
pub fn xi_invert(alpha: f64, capacity: usize) -> Result<XiSolution, MogulskiiError> {
    let k = capacity as f64;
    if !(alpha > 0.0 && alpha < k) {
        return Err(MogulskiiError::AlphaOutOfRange { alpha, capacity });
    }
    let f = |beta: f64| dzeta0(beta, capacity) - alpha;
    let df = |beta: f64| ddzeta0(beta, capacity);
    let (lo, hi) = solve::bracket_increasing(f, 1.0, 16);
    let root = solve::newton_bisect(f, df, lo, hi, 1e-12, 300);
    let mut beta_star = root.x;
    // Polish: a few extra Newton steps to pin the stationarity residual.
    for _ in 0..6 {
        let r = f(beta_star);
        if math::abs(r) <= 2.5e-11 {
            break;
        }
        let d = df(beta_star);
        if !d.is_finite() || d <= 0.0 {
            break;
        }
        beta_star -= r / d;
    }
    let residual = math::abs(f(beta_star));
    Ok(XiSolution { alpha, capacity, xi: math::exp(beta_star), beta_star, residual })
}

/// Mogulskii Lagrangian `L₀(α) = α·β*(α) − ζ₀(β*(α))`.
///
/// Unshifted it is nonnegative, convex, symmetric about `K/2`, zero only
/// at `K/2`, with endpoint limits `L₀(0) = L₀(K) = log(K+1)` (under the
/// `0·log 0 = 0` convention). `shifted` subtracts `log(K+1)`. Arguments
/// outside `[0, K]` are unreachable velocities and return `+∞`.
pub fn mogulskii_lagrangian(alpha: f64, capacity: usize, shifted: bool) -> f64 {
    let k = capacity as f64;
    let log_states = math::ln(k + 1.0);
    // Absorb rounding at the endpoints before rejecting.
    let a = if (-1e-12..=0.0).contains(&alpha) {
        0.0
    } else if alpha >= k && alpha <= k + 1e-12 {
        k
    } else {
        alpha
    };
    if !(0.0..=k).contains(&a) {
        return f64::INFINITY;
    }
    let unshifted = if a == 0.0 || a == k {
        log_states
    } else {
        let sol = xi_invert(a, capacity).expect("interior alpha inverts");
        let value = a * sol.beta_star - zeta0(sol.beta_star, capacity);
        // The transform is provably >= 0; clip solver noise at the floor.
        if value < 0.0 && value > -1e-12 {
            0.0
        } else {
            value
        }
    };
    if shifted {
        unshifted - log_states
    } else {
        unshifted
    }
}

/// i.i.d. action `Φ₀(φ) = ∫₀¹ L₀(∂_τφ) dτ` by the same midpoint rule as
/// the scaled action.
pub fn iid_action(path: &DiscretePath, capacity: usize, shifted: bool) -> f64 {
    let t = path.grid_size();
    let mut sum = 0.0;
    for j in 0..t {
        sum += mogulskii_lagrangian(path.velocity(j), capacity, shifted);
    }
    sum / t as f64
}
