//! The generalized HLS urn: urn-function vectors, validation, sampling,
//! exact finite-`N` laws, and path weights.
//!
//! A spec fixes a capacity `K` and one curve `π_k : [0,K] → [0,1]` per
//! increment `k ∈ {1,…,K}`; the no-sale probability is the complement
//!
//! ```text
//! π₀(α) = 1 − Σ_{k=1..K} π_k(α)
//! ```
//!
//! Given the running average `ψ_n = M_n/n` of past increments, the next
//! increment is drawn as `P(σ_{n+1} = k | ψ_n) = π_k(ψ_n)`. Step `n` is
//! weighted by the average *before* it, `π_{σ_n}(ψ_{n−1})` with
//! `ψ_0 := psi_init`; this is the unique indexing under which the weights
//! of all `(K+1)^N` histories sum to one (checked by the normalization
//! tests).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;
use crate::solve;

/// Probabilities within this distance of `[0,1]` are clamped rather than
/// rejected; anything further out is a validation violation.
pub const PROB_TOL: f64 = 1e-12;

/// Largest supported capacity. Far beyond any numerically sensible range
/// (the interpolated Kronecker basis degrades long before this), but keeps
/// increments representable in a byte.
pub const MAX_CAPACITY: usize = 255;

/// Default validation grid resolution.
pub const DEFAULT_GRID_SIZE: usize = 1024;

/// Work ceiling for [`exact_distribution`] (number of weighted transitions).
const DP_WORK_LIMIT: u64 = 20_000_000_000;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Structural problems with a spec (shape, not values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    ZeroCapacity,
    CapacityTooLarge { capacity: usize },
    WrongComponentCount { expected: usize, got: usize },
    EmptyPolynomial { component: usize },
    TooFewKnots { component: usize },
    KnotsNotIncreasing { component: usize },
    KnotsDoNotCoverDomain { component: usize },
}

impl core::fmt::Display for SpecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpecError::ZeroCapacity => write!(f, "capacity K must be at least 1"),
            SpecError::CapacityTooLarge { capacity } => {
                write!(f, "capacity K = {capacity} exceeds the supported maximum {MAX_CAPACITY}")
            }
            SpecError::WrongComponentCount { expected, got } => {
                write!(f, "expected {expected} urn-function curves (k = 1..K), got {got}")
            }
            SpecError::EmptyPolynomial { component } => {
                write!(f, "curve {component}: polynomial needs at least one coefficient")
            }
            SpecError::TooFewKnots { component } => {
                write!(f, "curve {component}: piecewise-linear table needs at least two knots")
            }
            SpecError::KnotsNotIncreasing { component } => {
                write!(f, "curve {component}: knot abscissae must be strictly increasing")
            }
            SpecError::KnotsDoNotCoverDomain { component } => {
                write!(f, "curve {component}: knots must cover [0, K]")
            }
        }
    }
}

/// Runtime errors from urn operations.
#[derive(Debug, Clone, PartialEq)]
pub enum UrnError {
    AlphaOutOfRange { alpha: f64, capacity: usize },
    /// A curve produced a value outside `[0,1]` beyond [`PROB_TOL`] at
    /// evaluation time (possible between validation grid points).
    ProbabilityOutOfBounds { k: usize, alpha: f64, value: f64 },
    PsiInitOutOfRange { value: f64, capacity: usize },
    EmptySequence,
    IncrementOutOfRange { index: usize, value: u8, capacity: usize },
    EventBounds { lo: f64, hi: f64, capacity: usize },
    /// The dynamic program would exceed the in-memory work ceiling.
    ResourceLimit { work: u64, limit: u64 },
}

impl core::fmt::Display for UrnError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            UrnError::AlphaOutOfRange { alpha, capacity } => {
                write!(f, "average {alpha} outside [0, {capacity}]")
            }
            UrnError::ProbabilityOutOfBounds { k, alpha, value } => {
                write!(f, "pi_{k}({alpha}) = {value} outside [0,1] beyond tolerance")
            }
            UrnError::PsiInitOutOfRange { value, capacity } => {
                write!(f, "psi_init = {value} outside [0, {capacity}]")
            }
            UrnError::EmptySequence => write!(f, "history must contain at least one step"),
            UrnError::IncrementOutOfRange { index, value, capacity } => {
                write!(f, "step {index} has increment {value} outside 0..={capacity}")
            }
            UrnError::EventBounds { lo, hi, capacity } => {
                write!(f, "event [{lo}, {hi}] is not a sub-interval of [0, {capacity}]")
            }
            UrnError::ResourceLimit { work, limit } => {
                write!(f, "exact law needs {work} transitions, above the limit {limit}")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Curves and specs
// ---------------------------------------------------------------------------

/// One urn-function curve on `[0, K]`.
#[derive(Debug, Clone, PartialEq)]
pub enum UrnCurve {
    /// Polynomial in the average, coefficients in ascending degree.
    Poly { coeffs: Vec<f64> },
    /// Piecewise-linear table of `(alpha, value)` knots covering `[0, K]`,
    /// strictly increasing in alpha.
    Pwl { knots: Vec<(f64, f64)> },
}

impl UrnCurve {
    /// Constant curve, handy in tests and builders.
    pub fn constant(value: f64) -> Self {
        UrnCurve::Poly { coeffs: vec![value] }
    }

    /// Deterministic evaluation (Horner / table lookup); no clamping.
    pub fn eval(&self, alpha: f64) -> f64 {
        match self {
            UrnCurve::Poly { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = acc * alpha + c;
                }
                acc
            }
            UrnCurve::Pwl { knots } => {
                let last = knots.len() - 1;
                if alpha <= knots[0].0 {
                    return knots[0].1;
                }
                if alpha >= knots[last].0 {
                    return knots[last].1;
                }
                // Binary search for the segment containing alpha.
                let mut lo = 0;
                let mut hi = last;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if knots[mid].0 <= alpha {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (x0, y0) = knots[lo];
                let (x1, y1) = knots[hi];
                y0 + (y1 - y0) * ((alpha - x0) / (x1 - x0))
            }
        }
    }

    fn check_shape(&self, component: usize, cap: f64) -> Result<(), SpecError> {
        match self {
            UrnCurve::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(SpecError::EmptyPolynomial { component });
                }
            }
            UrnCurve::Pwl { knots } => {
                if knots.len() < 2 {
                    return Err(SpecError::TooFewKnots { component });
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(SpecError::KnotsNotIncreasing { component });
                }
                if knots[0].0 > 0.0 || knots[knots.len() - 1].0 < cap {
                    return Err(SpecError::KnotsDoNotCoverDomain { component });
                }
            }
        }
        Ok(())
    }
}

/// A single bound violation found on the validation grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `π_k(alpha)` left `[0,1]` (k = 1..K).
    ComponentRange { k: usize, alpha: f64, value: f64 },
    /// The component sum exceeded one, so the derived `π₀` would be negative.
    SumExceedsOne { alpha: f64, sum: f64 },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::ComponentRange { k, alpha, value } => {
                write!(f, "pi_{k}({alpha:.6}) = {value:.6} outside [0,1]")
            }
            Violation::SumExceedsOne { alpha, sum } => {
                write!(f, "sum of pi_k({alpha:.6}) = {sum:.6} > 1")
            }
        }
    }
}

/// Grid-based validation outcome; empty means the spec is usable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// One human-readable line per violation.
    pub fn lines(&self) -> Vec<String> {
        self.violations.iter().map(|v| format!("{v}")).collect()
    }
}

/// Capacity plus the K urn-function curves for k = 1..K.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnSpec {
    capacity: usize,
    components: Vec<UrnCurve>,
    grid_size: usize,
}

impl UrnSpec {
    /// Builds a spec after structural checks; value checks happen in
    /// [`UrnSpec::validate`].
    pub fn new(capacity: usize, components: Vec<UrnCurve>) -> Result<Self, SpecError> {
        if capacity == 0 {
            return Err(SpecError::ZeroCapacity);
        }
        if capacity > MAX_CAPACITY {
            return Err(SpecError::CapacityTooLarge { capacity });
        }
        if components.len() != capacity {
            return Err(SpecError::WrongComponentCount { expected: capacity, got: components.len() });
        }
        let cap = capacity as f64;
        for (i, c) in components.iter().enumerate() {
            c.check_shape(i + 1, cap)?;
        }
        Ok(UrnSpec { capacity, components, grid_size: DEFAULT_GRID_SIZE })
    }

    /// Overrides the validation grid resolution (number of cells over `[0,K]`).
    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size.max(1);
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn components(&self) -> &[UrnCurve] {
        &self.components
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Checks `π_k(α) ∈ [0,1]` and `Σ_k π_k(α) ≤ 1` on the validation grid.
    ///
    /// Values within [`PROB_TOL`] of the bounds pass (they are clamped at
    /// evaluation time); everything else is reported with its location.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let cap = self.capacity as f64;
        for i in 0..=self.grid_size {
            let alpha = cap * (i as f64) / (self.grid_size as f64);
            let mut sum = 0.0;
            for (idx, curve) in self.components.iter().enumerate() {
                let value = curve.eval(alpha);
                if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&value) || value.is_nan() {
                    violations.push(Violation::ComponentRange { k: idx + 1, alpha, value });
                }
                sum += value;
            }
            if sum > 1.0 + PROB_TOL {
                violations.push(Violation::SumExceedsOne { alpha, sum });
            }
        }
        ValidationReport { violations }
    }

    /// Validates and wraps into an evaluable [`Urn`].
    pub fn into_urn(self) -> Result<Urn, ValidationReport> {
        let report = self.validate();
        if report.is_clean() {
            Ok(Urn { spec: self })
        } else {
            Err(report)
        }
    }
}

// ---------------------------------------------------------------------------
// Validated urn
// ---------------------------------------------------------------------------

/// A spec that passed grid validation; the evaluation entry point for
/// everything downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Urn {
    spec: UrnSpec,
}

impl Urn {
    pub fn spec(&self) -> &UrnSpec {
        &self.spec
    }

    pub fn capacity(&self) -> usize {
        self.spec.capacity
    }

    pub fn capacity_f64(&self) -> f64 {
        self.spec.capacity as f64
    }

    /// `π_k(α)` for `k ∈ {0,…,K}`; `k = 0` is the derived complement.
    ///
    /// Values within [`PROB_TOL`] of `[0,1]` are clamped; values further out
    /// (possible between validation grid points) are an error.
    pub fn pi(&self, k: usize, alpha: f64) -> Result<f64, UrnError> {
        self.check_alpha(alpha)?;
        let value = if k == 0 {
            let mut sum = 0.0;
            for c in &self.spec.components {
                sum += c.eval(alpha);
            }
            1.0 - sum
        } else {
            self.spec.components[k - 1].eval(alpha)
        };
        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&value) || value.is_nan() {
            return Err(UrnError::ProbabilityOutOfBounds { k, alpha, value });
        }
        Ok(value.clamp(0.0, 1.0))
    }

    /// All `K + 1` step probabilities at once, clamped into `[0,1]`.
    pub fn pi_all(&self, alpha: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.capacity + 1];
        self.pi_all_into(alpha, &mut out);
        out
    }

    /// Allocation-free variant of [`Urn::pi_all`] for hot loops.
    ///
    /// `out` must have length `K + 1`. `alpha` is clamped into `[0,K]` to
    /// absorb floating-point drift from callers that track averages
    /// incrementally.
    pub fn pi_all_into(&self, alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.spec.capacity + 1);
        let a = alpha.clamp(0.0, self.capacity_f64());
        let mut sum = 0.0;
        for (k, curve) in self.spec.components.iter().enumerate() {
            let v = curve.eval(a).clamp(0.0, 1.0);
            out[k + 1] = v;
            sum += v;
        }
        out[0] = (1.0 - sum).clamp(0.0, 1.0);
    }

    /// Average increment `π̄(α) = Σ_k k·π_k(α)`.
    pub fn mean_step(&self, alpha: f64) -> Result<f64, UrnError> {
        self.check_alpha(alpha)?;
        Ok(self.mean_step_clamped(alpha))
    }

    pub(crate) fn mean_step_clamped(&self, alpha: f64) -> f64 {
        let a = alpha.clamp(0.0, self.capacity_f64());
        let mut mean = 0.0;
        for (k, curve) in self.spec.components.iter().enumerate() {
            mean += (k + 1) as f64 * curve.eval(a).clamp(0.0, 1.0);
        }
        mean.clamp(0.0, self.capacity_f64())
    }

    /// Locates the convergence set `C = {α : π̄(α) = α}`.
    ///
    /// Sign changes of `π̄ − id` on the scan grid are refined by bisection;
    /// grid points where `|π̄ − id| < tol` without a sign change are
    /// reported as tangential (unverified); runs of exact zeros are
    /// reported as violations of the isolated-fixed-points assumption.
    pub fn fixed_points(&self, grid_size: usize, tol: f64) -> FixedPointReport {
        let cap = self.capacity_f64();
        let n = grid_size.max(2);
        let g = |a: f64| self.mean_step_clamped(a) - a;
        let xs: Vec<f64> = (0..=n).map(|i| cap * i as f64 / n as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&a| g(a)).collect();

        let exact_zero = 1e-14 * cap.max(1.0);
        let mut roots: Vec<f64> = Vec::new();
        let mut isolation_violations: Vec<(f64, f64)> = Vec::new();

        // Runs of exact zeros: length 1 is a grid-aligned root, longer runs
        // mean an interval of fixed points.
        let mut i = 0;
        while i <= n {
            if math::abs(fs[i]) <= exact_zero {
                let start = i;
                while i < n && math::abs(fs[i + 1]) <= exact_zero {
                    i += 1;
                }
                if i > start {
                    isolation_violations.push((xs[start], xs[i]));
                } else {
                    roots.push(xs[start]);
                }
            }
            i += 1;
        }

        // Strict sign changes between grid points.
        for j in 0..n {
            if fs[j] * fs[j + 1] < 0.0 {
                let r = solve::bisect(g, xs[j], xs[j + 1], 1e-15 * cap.max(1.0), 200);
                roots.push(r.x);
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| math::abs(*a - *b) <= cap / n as f64);
        roots.retain(|&r| math::abs(g(r)) <= tol);

        // Tangential candidates: small |g| on the grid, no verified root or
        // plateau nearby. Consecutive grid hits collapse to their best point.
        let cell = cap / n as f64;
        let near_known = |a: f64, roots: &[f64], plateaus: &[(f64, f64)]| {
            roots.iter().any(|&r| math::abs(r - a) <= 1.5 * cell)
                || plateaus.iter().any(|&(lo, hi)| a >= lo - 1.5 * cell && a <= hi + 1.5 * cell)
        };
        let mut tangential: Vec<f64> = Vec::new();
        let mut j = 0;
        while j <= n {
            if math::abs(fs[j]) < tol && !near_known(xs[j], &roots, &isolation_violations) {
                let mut best = j;
                while j < n && math::abs(fs[j + 1]) < tol {
                    j += 1;
                    if math::abs(fs[j]) < math::abs(fs[best]) && !near_known(xs[j], &roots, &isolation_violations) {
                        best = j;
                    }
                }
                if !near_known(xs[best], &roots, &isolation_violations) {
                    tangential.push(xs[best]);
                }
            }
            j += 1;
        }

        FixedPointReport { roots, tangential, isolation_violations }
    }

    fn check_alpha(&self, alpha: f64) -> Result<(), UrnError> {
        if alpha >= 0.0 && alpha <= self.capacity_f64() {
            Ok(())
        } else {
            Err(UrnError::AlphaOutOfRange { alpha, capacity: self.spec.capacity })
        }
    }
}

/// Result of a fixed-point scan of the mean step.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    /// Verified crossings: `|π̄(α*) − α*| ≤ tol` after bisection.
    pub roots: Vec<f64>,
    /// Grid points with `|π̄ − id| < tol` but no sign change; unverified.
    pub tangential: Vec<f64>,
    /// Sub-intervals where `π̄ ≡ id` on the grid, violating the
    /// isolated-fixed-points assumption.
    pub isolation_violations: Vec<(f64, f64)>,
}

// ---------------------------------------------------------------------------
// Histories and events
// ---------------------------------------------------------------------------

/// A full increment sequence `σ ∈ {0,…,K}^N` with the initial average used
/// before the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketHistory {
    steps: Vec<u8>,
    capacity: usize,
    psi_init: f64,
    seed: Option<u64>,
}

impl MarketHistory {
    pub fn new(steps: Vec<u8>, capacity: usize, psi_init: f64) -> Result<Self, UrnError> {
        if steps.is_empty() {
            return Err(UrnError::EmptySequence);
        }
        if !(psi_init >= 0.0 && psi_init <= capacity as f64) {
            return Err(UrnError::PsiInitOutOfRange { value: psi_init, capacity });
        }
        for (i, &s) in steps.iter().enumerate() {
            if s as usize > capacity {
                return Err(UrnError::IncrementOutOfRange { index: i, value: s, capacity });
            }
        }
        Ok(MarketHistory { steps, capacity, psi_init, seed: None })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Always false; construction rejects empty sequences.
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[u8] {
        &self.steps
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn psi_init(&self) -> f64 {
        self.psi_init
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Running totals `M_n = σ_1 + … + σ_n` for `n = 1..N`.
    pub fn running_sums(&self) -> Vec<u64> {
        let mut acc = 0u64;
        self.steps
            .iter()
            .map(|&s| {
                acc += s as u64;
                acc
            })
            .collect()
    }

    /// Final total `M_N`.
    pub fn final_sum(&self) -> u64 {
        self.steps.iter().map(|&s| s as u64).sum()
    }

    /// Running averages `ψ_n = M_n/n` for `n = 1..N`.
    pub fn averages(&self) -> Vec<f64> {
        let mut acc = 0u64;
        self.steps
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                acc += s as u64;
                acc as f64 / (i + 1) as f64
            })
            .collect()
    }

    /// Final average `ψ_N`.
    pub fn final_average(&self) -> f64 {
        self.final_sum() as f64 / self.steps.len() as f64
    }
}

/// Target interval `[lo, hi] ⊆ [0, K]` for the final average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointEvent {
    lo: f64,
    hi: f64,
}

impl EndpointEvent {
    pub fn new(lo: f64, hi: f64, capacity: usize) -> Result<Self, UrnError> {
        let cap = capacity as f64;
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || hi > cap || lo > hi {
            return Err(UrnError::EventBounds { lo, hi, capacity });
        }
        Ok(EndpointEvent { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Membership test for a finite-`N` average.
    pub fn contains(&self, psi: f64) -> bool {
        psi >= self.lo && psi <= self.hi
    }
}

// ---------------------------------------------------------------------------
// Process operations
// ---------------------------------------------------------------------------

/// Draws a history of length `n`: the first step uses `π(psi_init)`, step
/// `n+1` uses `π(ψ_n)`. Reproducible given the seed.
pub fn simulate(urn: &Urn, n: usize, psi_init: f64, seed: u64) -> Result<MarketHistory, UrnError> {
    if n == 0 {
        return Err(UrnError::EmptySequence);
    }
    let cap = urn.capacity();
    if !(psi_init >= 0.0 && psi_init <= cap as f64) {
        return Err(UrnError::PsiInitOutOfRange { value: psi_init, capacity: cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs = vec![0.0; cap + 1];
    let mut steps = Vec::with_capacity(n);
    let mut total: u64 = 0;
    let mut psi = psi_init;
    for step in 0..n {
        urn.pi_all_into(psi, &mut probs);
        let k = sample_categorical(&probs, &mut rng);
        steps.push(k as u8);
        total += k as u64;
        psi = total as f64 / (step + 1) as f64;
    }
    let mut history = MarketHistory::new(steps, cap, psi_init)?;
    history.seed = Some(seed);
    Ok(history)
}

/// Inverse-CDF draw over `probs`; zero-probability outcomes are never
/// proposed, and rounding slack at the top falls back to the last positive
/// entry.
fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = uniform_f64(rng);
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = k;
        acc += p;
        if u < acc {
            return k;
        }
    }
    last_positive
}

/// Uniform in `[0, 1)` from 53 random bits.
fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Probability of increment `k` given the average before the step.
pub fn step_weight(urn: &Urn, k: usize, psi_prev: f64) -> Result<f64, UrnError> {
    if k > urn.capacity() {
        return Err(UrnError::IncrementOutOfRange { index: 0, value: k.min(255) as u8, capacity: urn.capacity() });
    }
    urn.pi(k, psi_prev)
}

/// Probability that exactly this history is realized:
/// `Π_n π_{σ_n}(ψ_{n−1})` with `ψ_0 = psi_init`. Underflows to zero for
/// long histories; see [`action`] for the log-space version.
pub fn path_weight(urn: &Urn, history: &MarketHistory) -> f64 {
    let mut probs = vec![0.0; urn.capacity() + 1];
    let mut weight = 1.0;
    let mut total: u64 = 0;
    let mut psi = history.psi_init();
    for (i, &s) in history.steps().iter().enumerate() {
        urn.pi_all_into(psi, &mut probs);
        weight *= probs[s as usize];
        total += s as u64;
        psi = total as f64 / (i + 1) as f64;
    }
    weight
}

/// Log-probability of the history (`−∞` when any step has weight zero).
pub fn action(urn: &Urn, history: &MarketHistory) -> f64 {
    let mut probs = vec![0.0; urn.capacity() + 1];
    let mut log_weight = 0.0;
    let mut total: u64 = 0;
    let mut psi = history.psi_init();
    for (i, &s) in history.steps().iter().enumerate() {
        urn.pi_all_into(psi, &mut probs);
        log_weight += math::ln(probs[s as usize]);
        total += s as u64;
        psi = total as f64 / (i + 1) as f64;
    }
    log_weight
}

/// Exact law of the total `M_N`: returns `P(M_N = m)` for `m = 0,…,K·N`.
///
/// Dynamic programming over the Markov state `(n, M_n)` — valid because the
/// step law depends on the past only through `ψ_n = M_n/n`. The result sums
/// to one up to accumulated rounding.
pub fn exact_distribution(urn: &Urn, n: usize, psi_init: f64) -> Result<Vec<f64>, UrnError> {
    if n == 0 {
        return Err(UrnError::EmptySequence);
    }
    let cap = urn.capacity();
    if !(psi_init >= 0.0 && psi_init <= cap as f64) {
        return Err(UrnError::PsiInitOutOfRange { value: psi_init, capacity: cap });
    }
    let kf = cap as u64;
    let nf = n as u64;
    // (K+1) weighted transitions out of each reachable (n, m) state.
    let states = nf * (kf * (nf - 1) / 2 + 1) + nf;
    let work = states.saturating_mul(kf + 1);
    if work > DP_WORK_LIMIT {
        return Err(UrnError::ResourceLimit { work, limit: DP_WORK_LIMIT });
    }

    let mut probs = vec![0.0; cap + 1];
    let mut prev = vec![1.0f64];
    for step in 0..n {
        let mut next = vec![0.0f64; cap * (step + 1) + 1];
        for (m, &mass) in prev.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let psi = if step == 0 { psi_init } else { m as f64 / step as f64 };
            urn.pi_all_into(psi, &mut probs);
            for (k, &p) in probs.iter().enumerate() {
                if p > 0.0 {
                    next[m + k] += mass * p;
                }
            }
        }
        prev = next;
    }
    Ok(prev)
}

/// Sums [`exact_distribution`] entries whose average `m/N` falls in the event.
pub fn event_probability(distribution: &[f64], n: usize, event: &EndpointEvent) -> f64 {
    let nf = n as f64;
    let lo = event.lo() * nf - 1e-9;
    let hi = event.hi() * nf + 1e-9;
    distribution
        .iter()
        .enumerate()
        .filter(|(m, _)| {
            let mf = *m as f64;
            mf >= lo && mf <= hi
        })
        .map(|(_, &p)| p)
        .sum()
}
