//! Continuous embedding of urn histories: the interpolated Kronecker basis,
//! `K`-Lipschitz discrete paths, and the scaled Lagrangian/action.
//!
//! The indicator `[α = k]` on the increment lattice extends to real
//! arguments as the Lagrange basis polynomial on the nodes `{0,…,K}`:
//!
//! ```text
//! δ_k(α) = Π_{z ∈ Ω\{k}} (z − α)/(z − k)
//! ```
//!
//! These reproduce the indicator exactly at integers and partition unity
//! for every real `α`. The scaled Lagrangian weights log urn functions by
//! this basis,
//!
//! ```text
//! L(α, β) = Σ_k δ_k(α) · log π_k(β)
//! ```
//!
//! and the scaled action integrates it along a path, with the running
//! average `ψ(τ) = φ(τ)/τ` as the second argument.

use alloc::vec::Vec;

use crate::math;
use crate::urn::{MarketHistory, Urn};

/// Marker for a Lagrangian value of the form `(+∞) + (−∞)`: at probability
/// floor zero, two vanishing urn functions hit Kronecker weights of opposite
/// sign and no extended-real value is meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Indeterminate;

impl core::fmt::Display for Indeterminate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "indeterminate value: conflicting infinities in the scaled Lagrangian")
    }
}

/// Errors from path construction and comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum PathError {
    EmptyGrid,
    FirstValueNotZero { value: f64 },
    VelocityOutOfRange { cell: usize, velocity: f64, capacity: usize },
    GridMismatch { left: usize, right: usize },
}

impl core::fmt::Display for PathError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PathError::EmptyGrid => write!(f, "path needs at least one cell"),
            PathError::FirstValueNotZero { value } => {
                write!(f, "phi(0) must be 0, got {value}")
            }
            PathError::VelocityOutOfRange { cell, velocity, capacity } => {
                write!(f, "cell {cell}: velocity {velocity} outside [0, {capacity}]")
            }
            PathError::GridMismatch { left, right } => {
                write!(f, "paths have different grids: {left} vs {right}")
            }
        }
    }
}

/// Interpolated Kronecker delta `δ_k(α)` for capacity `K`.
///
/// Literal product formula: exact at the integer nodes (`1` at `α = k`,
/// `0` at other integers of `{0,…,K}`), analytic for any real `α`.
pub fn kron_delta(capacity: usize, k: usize, alpha: f64) -> f64 {
    debug_assert!(k <= capacity, "k = {k} outside 0..={capacity}");
    let mut product = 1.0;
    let kf = k as f64;
    for z in 0..=capacity {
        if z == k {
            continue;
        }
        let zf = z as f64;
        product *= (zf - alpha) / (zf - kf);
    }
    product
}

/// Piecewise-linear `K`-Lipschitz path on a uniform grid of `[0,1]` with
/// `φ(0) = 0`; node `j` sits at `τ_j = j/T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    values: Vec<f64>,
    capacity: usize,
}

/// Slack accepted on velocity bounds, to absorb rounding in `φ` differences.
const VELOCITY_TOL: f64 = 1e-9;

impl DiscretePath {
    /// Wraps node values `φ_0,…,φ_T`, checking `φ_0 = 0` and the velocity
    /// bounds `0 ≤ (φ_{j+1} − φ_j)·T ≤ K` (up to rounding slack).
    pub fn new(values: Vec<f64>, capacity: usize) -> Result<Self, PathError> {
        if values.len() < 2 {
            return Err(PathError::EmptyGrid);
        }
        if values[0] != 0.0 {
            return Err(PathError::FirstValueNotZero { value: values[0] });
        }
        let t = values.len() - 1;
        let slack = VELOCITY_TOL * (capacity as f64).max(1.0);
        for j in 0..t {
            let v = (values[j + 1] - values[j]) * t as f64;
            if !(v >= -slack && v <= capacity as f64 + slack) {
                return Err(PathError::VelocityOutOfRange { cell: j, velocity: v, capacity });
            }
        }
        Ok(DiscretePath { values, capacity })
    }

    /// Integrates a velocity vector: `φ_j = (v_0 + … + v_{j−1})/T`.
    pub fn from_velocities(velocities: &[f64], capacity: usize) -> Result<Self, PathError> {
        if velocities.is_empty() {
            return Err(PathError::EmptyGrid);
        }
        let slack = VELOCITY_TOL * (capacity as f64).max(1.0);
        let t = velocities.len() as f64;
        let mut values = Vec::with_capacity(velocities.len() + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for (j, &v) in velocities.iter().enumerate() {
            if !(v >= -slack && v <= capacity as f64 + slack) {
                return Err(PathError::VelocityOutOfRange { cell: j, velocity: v, capacity });
            }
            acc += v.clamp(0.0, capacity as f64);
            values.push(acc / t);
        }
        Ok(DiscretePath { values, capacity })
    }

    /// Straight path `φ(τ) = slope·τ`.
    pub fn straight(grid_size: usize, slope: f64, capacity: usize) -> Result<Self, PathError> {
        if grid_size == 0 {
            return Err(PathError::EmptyGrid);
        }
        let values = (0..=grid_size).map(|j| slope * j as f64 / grid_size as f64).collect();
        DiscretePath::new(values, capacity)
    }

    /// Number of cells `T`.
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Node values `φ_0,…,φ_T`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell velocity `v_j = (φ_{j+1} − φ_j)·T`, clamped into `[0,K]`.
    pub fn velocity(&self, j: usize) -> f64 {
        let t = self.grid_size() as f64;
        ((self.values[j + 1] - self.values[j]) * t).clamp(0.0, self.capacity as f64)
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.grid_size()).map(|j| self.velocity(j)).collect()
    }

    /// Node average `ψ_j = φ_j/τ_j`; the `τ → 0` limit along the path is
    /// the initial velocity, so `psi(0)` returns `v_0`.
    pub fn psi(&self, j: usize) -> f64 {
        if j == 0 {
            return self.velocity(0);
        }
        let t = self.grid_size() as f64;
        (self.values[j] * t / j as f64).clamp(0.0, self.capacity as f64)
    }

    /// Average at the midpoint of cell `j`:
    /// `ψ_{j+1/2} = (φ_j + φ_{j+1})·T/(2j+1)`. For `j = 0` this reduces to
    /// the initial velocity, matching the `ψ(0+)` limit.
    pub fn psi_mid(&self, j: usize) -> f64 {
        let t = self.grid_size() as f64;
        ((self.values[j] + self.values[j + 1]) * t / (2 * j + 1) as f64)
            .clamp(0.0, self.capacity as f64)
    }

    /// Final average `ψ(1) = φ(1)`.
    pub fn endpoint_average(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Embeds a history as the piecewise-linear path through `φ_j = M_j/N`
/// (grid size `T = N`).
pub fn embed_path(history: &MarketHistory) -> DiscretePath {
    let n = history.len() as f64;
    let mut values = Vec::with_capacity(history.len() + 1);
    values.push(0.0);
    let mut acc = 0u64;
    for &s in history.steps() {
        acc += s as u64;
        values.push(acc as f64 / n);
    }
    DiscretePath { values, capacity: history.capacity() }
}

/// Scaled Lagrangian `L(α, β) = Σ_k δ_k(α) · log max(π_k(β), floor)`.
///
/// With `floor = 0`, a vanishing `π_k(β)` paired with `δ_k(α) ≠ 0`
/// contributes `∓∞` by the sign of `δ_k`; two such terms of opposite sign
/// have no meaningful extended-real value and yield [`Indeterminate`].
/// `β` is clamped into `[0,K]`; `α` may be any real (the basis is analytic).
pub fn scaled_lagrangian(urn: &Urn, alpha: f64, beta: f64, floor: f64) -> Result<f64, Indeterminate> {
    let cap = urn.capacity();
    let probs = urn.pi_all(beta.clamp(0.0, urn.capacity_f64()));
    scaled_lagrangian_with_probs(cap, alpha, &probs, floor)
}

/// Same as [`scaled_lagrangian`] with the `π(β)` vector already evaluated.
pub(crate) fn scaled_lagrangian_with_probs(
    capacity: usize,
    alpha: f64,
    probs: &[f64],
    floor: f64,
) -> Result<f64, Indeterminate> {
    let mut sum = 0.0;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for (k, &pk) in probs.iter().enumerate().take(capacity + 1) {
        let d = kron_delta(capacity, k, alpha);
        if d == 0.0 {
            continue;
        }
        let p = if pk > floor { pk } else { floor };
        if p <= 0.0 {
            if d > 0.0 {
                neg_inf = true;
            } else {
                pos_inf = true;
            }
            continue;
        }
        sum += d * math::ln(p);
    }
    match (pos_inf, neg_inf) {
        (true, true) => Err(Indeterminate),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok(sum),
    }
}

/// Scaled action `Φ(φ) = ∫₀¹ L(∂_τφ, ψ) dτ` by the midpoint rule:
/// `Σ_j (1/T)·L(v_j, ψ_{j+1/2})`. The first cell's midpoint average equals
/// the initial velocity, which is the `ψ(0+)` limit along the path.
///
/// Returns `−∞`/`+∞` if any cell does (consistently signed), and
/// [`Indeterminate`] if any cell is indeterminate or cells of opposite
/// infinite sign meet.
pub fn scaled_action(urn: &Urn, path: &DiscretePath, floor: f64) -> Result<f64, Indeterminate> {
    let t = path.grid_size();
    let mut sum = 0.0;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for j in 0..t {
        let l = scaled_lagrangian(urn, path.velocity(j), path.psi_mid(j), floor)?;
        if l == f64::INFINITY {
            pos_inf = true;
        } else if l == f64::NEG_INFINITY {
            neg_inf = true;
        } else {
            sum += l;
        }
    }
    match (pos_inf, neg_inf) {
        (true, true) => Err(Indeterminate),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok(sum / t as f64),
    }
}

/// Sup-distance `max_j |φ_j − φ'_j|` between paths on the same grid.
pub fn path_distance(a: &DiscretePath, b: &DiscretePath) -> Result<f64, PathError> {
    if a.grid_size() != b.grid_size() {
        return Err(PathError::GridMismatch { left: a.grid_size(), right: b.grid_size() });
    }
    let mut best = 0.0;
    for (x, y) in a.values().iter().zip(b.values().iter()) {
        let d = math::abs(x - y);
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{constant_k1, linear_k1, smooth_k2, uniform_spec};
    use crate::urn::MarketHistory;

    #[test]
    fn kron_delta_interpolates_at_integers() {
        for capacity in 1..=8 {
            for k in 0..=capacity {
                for z in 0..=capacity {
                    let expected = if z == k { 1.0 } else { 0.0 };
                    assert_eq!(kron_delta(capacity, k, z as f64), expected, "K={capacity} k={k} z={z}");
                }
            }
        }
    }

    #[test]
    fn kron_delta_k2_values() {
        assert!((kron_delta(2, 1, 0.5) - 0.75).abs() < 1e-15);
        // General product formula gives (alpha/2)(alpha - 1) for k = 2.
        let alpha = 0.5;
        assert!((kron_delta(2, 2, alpha) - (alpha / 2.0) * (alpha - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn kron_delta_k1_reduces_to_identity() {
        for i in 0..=20 {
            let alpha = -1.0 + 2.5 * i as f64 / 20.0;
            assert!((kron_delta(1, 1, alpha) - alpha).abs() < 1e-14);
            assert!((kron_delta(1, 0, alpha) - (1.0 - alpha)).abs() < 1e-14);
        }
    }

    #[test]
    fn partition_of_unity_dense_grid() {
        for capacity in 1..=8 {
            let span = capacity as f64 + 2.0;
            for i in 0..=2000 {
                let alpha = -1.0 + span * i as f64 / 2000.0;
                let sum: f64 = (0..=capacity).map(|k| kron_delta(capacity, k, alpha)).sum();
                assert!((sum - 1.0).abs() <= 1e-12, "K={capacity} alpha={alpha} sum={sum}");
            }
        }
    }

    #[test]
    fn path_invariants_enforced() {
        assert!(matches!(
            DiscretePath::new(vec![0.1, 0.2], 1),
            Err(PathError::FirstValueNotZero { .. })
        ));
        // Velocity 1.5 exceeds capacity 1.
        assert!(matches!(
            DiscretePath::new(vec![0.0, 1.5], 1),
            Err(PathError::VelocityOutOfRange { cell: 0, .. })
        ));
        // Decreasing segments are not K-Lipschitz-admissible.
        assert!(matches!(
            DiscretePath::new(vec![0.0, 0.5, 0.25], 1),
            Err(PathError::VelocityOutOfRange { cell: 1, .. })
        ));
        assert!(DiscretePath::new(vec![0.0, 0.5, 1.0], 1).is_ok());
    }

    #[test]
    fn embed_matches_running_sums() {
        let h = MarketHistory::new(vec![2, 0], 2, 1.0).unwrap();
        let path = embed_path(&h);
        assert_eq!(path.values(), &[0.0, 1.0, 1.0]);
        assert_eq!(path.grid_size(), 2);

        let h = MarketHistory::new(vec![1; 10], 1, 0.5).unwrap();
        let path = embed_path(&h);
        for (j, &phi) in path.values().iter().enumerate() {
            assert_eq!(phi, j as f64 / 10.0);
        }

        let h = MarketHistory::new(vec![1, 0, 2, 2, 0, 1, 2], 2, 1.0).unwrap();
        let path = embed_path(&h);
        let sums = h.running_sums();
        for j in 1..=h.len() {
            assert_eq!(path.values()[j], sums[j - 1] as f64 / 7.0);
        }
    }

    #[test]
    fn uniform_lagrangian_is_constant() {
        let urn = uniform_spec(2);
        for alpha in [-0.5, 0.0, 0.7, 1.3, 2.0, 2.5] {
            for beta in [0.0, 0.6, 1.9] {
                let l = scaled_lagrangian(&urn, alpha, beta, 0.0).unwrap();
                assert!((l + 3.0f64.ln()).abs() < 1e-12, "L({alpha},{beta}) = {l}");
            }
        }
    }

    #[test]
    fn k1_lagrangian_closed_form() {
        let urn = constant_k1(0.3);
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            let l = scaled_lagrangian(&urn, alpha, 0.5, 0.0).unwrap();
            let expected = alpha * 0.3f64.ln() + (1.0 - alpha) * 0.7f64.ln();
            assert!((l - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn k2_lagrangian_matches_basis_expansion() {
        let urn = smooth_k2();
        for &alpha in &[0.25, 1.0, 1.75] {
            for &beta in &[0.2, 1.1, 1.9] {
                let p1 = urn.pi(1, beta).unwrap();
                let p2 = urn.pi(2, beta).unwrap();
                let p0 = urn.pi(0, beta).unwrap();
                let expected = alpha * (2.0 - alpha) * p1.ln()
                    + (alpha / 2.0) * (alpha - 1.0) * p2.ln()
                    + (1.0 - alpha) * (1.0 - alpha / 2.0) * p0.ln();
                let l = scaled_lagrangian(&urn, alpha, beta, 0.0).unwrap();
                assert!((l - expected).abs() < 1e-14, "alpha={alpha} beta={beta}");
            }
        }
    }

    #[test]
    fn vanishing_component_gives_signed_infinity() {
        // pi_1(0) = 0 for the linear urn; delta_1(1) = 1.
        let urn = linear_k1();
        let l = scaled_lagrangian(&urn, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(l, f64::NEG_INFINITY);
        // Positive floor removes the infinity.
        let l = scaled_lagrangian(&urn, 1.0, 0.0, 1e-6).unwrap();
        assert!((l - 1e-6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn conflicting_infinities_are_indeterminate() {
        // pi_1 = beta(2-beta)/4 and pi_2 = beta/8 both vanish at beta = 0.
        // At alpha = 1.5 both deltas are positive, so the two log-zero
        // terms agree on -inf; at alpha = 2.5 they have opposite signs
        // (delta_1 = -1.25, delta_2 = +1.875) and no value is meaningful.
        let urn = crate::urn::UrnSpec::new(2, vec![
            crate::urn::UrnCurve::Poly { coeffs: vec![0.0, 0.5, -0.25] },
            crate::urn::UrnCurve::Poly { coeffs: vec![0.0, 0.125] },
        ])
        .unwrap()
        .into_urn()
        .unwrap();
        assert_eq!(scaled_lagrangian(&urn, 1.5, 0.0, 0.0), Ok(f64::NEG_INFINITY));
        assert_eq!(scaled_lagrangian(&urn, 2.5, 0.0, 0.0), Err(Indeterminate));
    }

    #[test]
    fn scaled_action_constant_integrand() {
        let urn = uniform_spec(2);
        let path = DiscretePath::straight(64, 1.3, 2).unwrap();
        let phi = scaled_action(&urn, &path, 0.0).unwrap();
        assert!((phi + 3.0f64.ln()).abs() < 1e-12);

        let urn = constant_k1(0.4);
        let path = DiscretePath::straight(50, 0.7, 1).unwrap();
        let phi = scaled_action(&urn, &path, 0.0).unwrap();
        let expected = 0.7 * 0.4f64.ln() + 0.3 * 0.6f64.ln();
        assert!((phi - expected).abs() < 1e-12);
    }

    #[test]
    fn linear_urn_diagonal_has_zero_action() {
        let urn = linear_k1();
        let path = DiscretePath::straight(128, 1.0, 1).unwrap();
        let phi = scaled_action(&urn, &path, 0.0).unwrap();
        assert!(phi.abs() < 1e-12, "phi = {phi}");
    }

    #[test]
    fn sup_distance_examples() {
        let zero = DiscretePath::straight(10, 0.0, 1).unwrap();
        let diag = DiscretePath::straight(10, 1.0, 1).unwrap();
        assert_eq!(path_distance(&zero, &zero).unwrap(), 0.0);
        assert_eq!(path_distance(&zero, &diag).unwrap(), 1.0);

        // Interior-node bump on a half-slope path (the diagonal has no
        // Lipschitz slack to absorb one).
        let half = DiscretePath::straight(10, 0.5, 1).unwrap();
        let mut bumped = half.values().to_vec();
        bumped[5] += 0.01;
        let bumped = DiscretePath::new(bumped, 1).unwrap();
        assert!((path_distance(&half, &bumped).unwrap() - 0.01).abs() < 1e-15);

        let other = DiscretePath::straight(11, 1.0, 1).unwrap();
        assert!(matches!(path_distance(&zero, &other), Err(PathError::GridMismatch { .. })));
    }

    #[test]
    fn velocity_and_psi_accessors() {
        let path = DiscretePath::from_velocities(&[1.0, 0.0, 2.0, 1.0], 2).unwrap();
        assert_eq!(path.grid_size(), 4);
        assert!((path.velocity(0) - 1.0).abs() < 1e-12);
        assert!((path.velocity(2) - 2.0).abs() < 1e-12);
        // psi(0) is the initial velocity (the psi(0+) limit).
        assert!((path.psi(0) - 1.0).abs() < 1e-12);
        // psi_2 = phi_2 / (2/4) = (1/4) / (1/2) = 1/2.
        assert!((path.psi(2) - 0.5).abs() < 1e-12);
        // First-cell midpoint average equals the first velocity.
        assert!((path.psi_mid(0) - 1.0).abs() < 1e-12);
        assert!((path.endpoint_average() - 1.0).abs() < 1e-12);
    }
}
