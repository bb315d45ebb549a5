//! Endpoint-event rate computation: the candidate local rate, the
//! discretized path optimizer, the zero-cost flow, and an independent
//! Cramér oracle.
//!
//! The candidate rate of a path is the functional
//!
//! ```text
//! I(φ) = Φ₀(φ) − Φ(φ) = ∫₀¹ R(∂_τφ, ψ) dτ,
//! R(α, β) = L₀(α) − log(K+1) − L(α, β)
//! ```
//!
//! (shifted gauge; for `K = 1` the integrand is the relative entropy
//! `D(α ‖ π₁(β))`). The entropy density of an endpoint event is
//! `−inf I(φ)` over `K`-Lipschitz paths whose final average lies in the
//! event — the orientation that reproduces enumeration results in the
//! proven binary regime; the infimum of `Φ − Φ₀` as sometimes written
//! picks the least probable path instead.
//!
//! For `K ≥ 2` the interpolated integrand is a candidate only; the
//! [`cramer_local_rate`] oracle (classical tilt of the frozen step law
//! `π(β)`) quantifies where it departs from the classical bound, most
//! visibly for degenerate specs where a vanishing component drives `R`
//! to `+∞` while the Cramér value stays finite.

use alloc::vec;
use alloc::vec::Vec;

use crate::embedding::{scaled_lagrangian_with_probs, DiscretePath, Indeterminate};
use crate::math;
use crate::mogulskii::mogulskii_lagrangian;
use crate::solve;
use crate::urn::{EndpointEvent, Urn};

/// Errors from the endpoint optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum VariationalError {
    /// Some component vanishes somewhere on `[0,K]` and no positive floor
    /// was supplied: the rate surface has `+∞` plateaus. Set
    /// `allow_infinite_cells` to optimize anyway.
    DegenerateSpec { min_pi: f64 },
    /// Restart index out of range.
    BadRestartIndex { index: usize, restarts: usize },
    /// Grid must have at least one cell.
    EmptyGrid,
}

impl core::fmt::Display for VariationalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            VariationalError::DegenerateSpec { min_pi } => write!(
                f,
                "spec has min pi = {min_pi} on the grid; pass a positive floor or allow_infinite_cells"
            ),
            VariationalError::BadRestartIndex { index, restarts } => {
                write!(f, "restart index {index} outside 0..{restarts}")
            }
            VariationalError::EmptyGrid => write!(f, "grid size must be at least 1"),
        }
    }
}

/// Candidate local rate `R(α, β) = L₀_shifted(α) − L(α, β)`.
///
/// `+∞` where the interpolated Lagrangian diverges to `−∞` (and `−∞` in
/// the mirror case); [`Indeterminate`] propagates from the Lagrangian.
pub fn local_rate(urn: &Urn, alpha: f64, beta: f64, floor: f64) -> Result<f64, Indeterminate> {
    let probs = urn.pi_all(beta.clamp(0.0, urn.capacity_f64()));
    local_rate_with_probs(urn.capacity(), alpha, &probs, floor)
}

fn local_rate_with_probs(capacity: usize, alpha: f64, probs: &[f64], floor: f64) -> Result<f64, Indeterminate> {
    let l0 = mogulskii_lagrangian(alpha, capacity, true);
    let l = scaled_lagrangian_with_probs(capacity, alpha, probs, floor)?;
    let r = l0 - l;
    if r.is_nan() {
        return Err(Indeterminate);
    }
    Ok(r)
}

/// Classical Cramér rate of the step law frozen at average `β`:
///
/// ```text
/// sup_λ { αλ − log Σ_k π_k(β) e^{kλ} }
/// ```
///
/// Zero iff `α = π̄(β)` (inside the support hull); `+∞` outside the hull;
/// `−log π_k` at the support edges. Shares the monotone solver with the
/// tilt inversion. This is an independent check on [`local_rate`], not an
/// ingredient of it.
pub fn cramer_local_rate(urn: &Urn, alpha: f64, beta: f64) -> f64 {
    let probs = urn.pi_all(beta.clamp(0.0, urn.capacity_f64()));
    cramer_with_probs(&probs, alpha)
}

fn cramer_with_probs(probs: &[f64], alpha: f64) -> f64 {
    const EDGE: f64 = 1e-12;
    let mut kmin = usize::MAX;
    let mut kmax = 0usize;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            if kmin == usize::MAX {
                kmin = k;
            }
            kmax = k;
        }
    }
    if kmin == usize::MAX {
        return f64::INFINITY;
    }
    if alpha < kmin as f64 - EDGE || alpha > kmax as f64 + EDGE {
        return f64::INFINITY;
    }
    if alpha <= kmin as f64 + EDGE {
        return -math::ln(probs[kmin]);
    }
    if alpha >= kmax as f64 - EDGE {
        return -math::ln(probs[kmax]);
    }

    let mean_and_var = |lambda: f64| {
        let c = if lambda >= 0.0 { kmax as f64 * lambda } else { kmin as f64 * lambda };
        let mut den = 0.0;
        let mut num = 0.0;
        let mut sq = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let w = p * math::exp(k as f64 * lambda - c);
            den += w;
            num += k as f64 * w;
            sq += (k * k) as f64 * w;
        }
        let mean = num / den;
        (mean, sq / den - mean * mean, c + math::ln(den))
    };

    let f = |lambda: f64| mean_and_var(lambda).0 - alpha;
    let df = |lambda: f64| mean_and_var(lambda).1;
    let (lo, hi) = solve::bracket_increasing(f, 1.0, 60);
    let root = solve::newton_bisect(f, df, lo, hi, 1e-12, 300);
    let (_, _, log_mgf) = mean_and_var(root.x);
    let rate = alpha * root.x - log_mgf;
    if rate < 0.0 && rate > -1e-11 {
        0.0
    } else {
        rate
    }
}

/// Path rate `I(φ) = Σ_j (1/T)·R(v_j, ψ_{j+1/2})`; equals
/// `iid_action(path, shifted) − scaled_action(path)` up to rounding.
pub fn rate_functional(urn: &Urn, path: &DiscretePath, floor: f64) -> Result<f64, Indeterminate> {
    let t = path.grid_size();
    let mut probs = vec![0.0; urn.capacity() + 1];
    let mut sum = 0.0;
    let mut pos_inf = false;
    let mut neg_inf = false;
    for j in 0..t {
        urn.pi_all_into(path.psi_mid(j), &mut probs);
        let r = local_rate_with_probs(urn.capacity(), path.velocity(j), &probs, floor)?;
        if r == f64::INFINITY {
            pos_inf = true;
        } else if r == f64::NEG_INFINITY {
            neg_inf = true;
        } else {
            sum += r;
        }
    }
    match (pos_inf, neg_inf) {
        (true, true) => Err(Indeterminate),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (false, false) => Ok(sum / t as f64),
    }
}

// ---------------------------------------------------------------------------
// Endpoint optimizer
// ---------------------------------------------------------------------------

/// Which Lagrangian convention the result bookkeeping reports in. The
/// shift is a constant gauge that cancels against the change-of-measure
/// term, so both settings produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    #[default]
    Shifted,
    Unshifted,
}

/// Knobs for [`optimize_endpoint`].
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Independent starts: straight lines spanning the event plus the
    /// projected zero-cost flow.
    pub restarts: usize,
    /// Stop a restart when a gradient step improves the objective by less
    /// than this.
    pub tol_obj: f64,
    /// Restart spread below which the run counts as converged.
    pub tol_agree: f64,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Probability floor passed to the scaled Lagrangian.
    pub floor: f64,
    /// Optimize even when some `π_k` vanishes on `[0,K]` at floor zero
    /// (the rate surface then has `+∞` plateaus, which the line search
    /// simply never enters).
    pub allow_infinite_cells: bool,
    /// Central finite-difference step, as a fraction of `K`.
    pub fd_step: f64,
    /// Coordinate-descent passes after projected gradient.
    pub polish_sweeps: usize,
    pub gauge: Gauge,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            restarts: 8,
            tol_obj: 1e-9,
            tol_agree: 1e-4,
            max_iters: 300,
            floor: 0.0,
            allow_infinite_cells: false,
            fd_step: 1e-6,
            polish_sweeps: 1,
            gauge: Gauge::Shifted,
        }
    }
}

/// One restart's endpoint: the gauge-free objective
/// `Σ (1/T)·(L₀_unshifted(v_j) − L(v_j, ψ_{j+1/2}))` at its final
/// velocity vector.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub index: usize,
    pub objective: f64,
    pub velocities: Vec<f64>,
    pub iterations: usize,
    /// Whether the restart stopped on the improvement tolerance (rather
    /// than the iteration cap).
    pub tol_reached: bool,
}

/// Optimizer output for an endpoint event.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub event: EndpointEvent,
    /// `φ(E*) = −I(optimal_path)`; nonpositive wherever the candidate
    /// theory is consistent.
    pub entropy_density: f64,
    pub optimal_path: DiscretePath,
    /// Gradient iterations of the winning restart.
    pub iterations: usize,
    /// Improvement tolerance reached and restarts agreed within
    /// `tol_agree`.
    pub converged: bool,
    /// Gap between the two best restart objectives (0 with one restart).
    pub restarts_agreement: f64,
    /// `I(optimal_path) − ∫ cramer_local_rate` along the optimum; `None`
    /// when either side is non-finite.
    pub oracle_gap: Option<f64>,
}

struct EndpointProblem<'a> {
    urn: &'a Urn,
    capacity: usize,
    capf: f64,
    t: usize,
    floor: f64,
    lo: f64,
    hi: f64,
}

impl<'a> EndpointProblem<'a> {
    fn new(urn: &'a Urn, event: &EndpointEvent, t: usize) -> Self {
        let capf = urn.capacity_f64();
        // Zero-width events are widened to one grid cell.
        let (mut lo, mut hi) = (event.lo(), event.hi());
        if hi == lo {
            let half = 0.5 / t as f64;
            lo = (lo - half).max(0.0);
            hi = (hi + half).min(capf);
        }
        EndpointProblem { urn, capacity: urn.capacity(), capf, t, floor: 0.0, lo, hi }
    }

    /// Unshifted integrand at cell `j` given the velocity prefix sum `s`.
    /// Non-finite values (±∞, indeterminate) all map to `+∞`: such cells
    /// are unusable for minimization.
    fn cell(&self, j: usize, s: f64, v: f64, probs: &mut [f64]) -> f64 {
        let psi = ((2.0 * s + v) / (2 * j + 1) as f64).clamp(0.0, self.capf);
        let l0 = mogulskii_lagrangian(v, self.capacity, false);
        if !l0.is_finite() {
            return f64::INFINITY;
        }
        self.urn.pi_all_into(psi, probs);
        match scaled_lagrangian_with_probs(self.capacity, v, probs, self.floor) {
            Ok(l) => {
                let r = l0 - l;
                if r.is_finite() {
                    r
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    }

    /// Sum of cells `j0..T` with `vels[j0]` replaced by `v_first`;
    /// `s0` is the velocity prefix below `j0`. Unnormalized (no `1/T`).
    fn tail(&self, j0: usize, s0: f64, v_first: f64, vels: &[f64], probs: &mut [f64]) -> f64 {
        let mut s = s0;
        let mut acc = 0.0;
        let mut v = v_first;
        for (j, &vj) in vels.iter().enumerate().take(self.t).skip(j0) {
            if j > j0 {
                v = vj;
            }
            let c = self.cell(j, s, v, probs);
            if c == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += c;
            s += v;
        }
        acc
    }

    fn energy(&self, vels: &[f64], probs: &mut [f64]) -> f64 {
        self.tail(0, 0.0, vels[0], vels, probs)
    }

    /// Euclidean projection onto `[0,K]^T ∩ {mean(v) ∈ [lo,hi]}`: clip to
    /// the box, then shift all coordinates uniformly (re-clipping) until
    /// the mean meets the violated bound.
    fn project(&self, vels: &mut [f64]) {
        for v in vels.iter_mut() {
            *v = v.clamp(0.0, self.capf);
        }
        let t = self.t as f64;
        let mean = vels.iter().sum::<f64>() / t;
        let target = if mean < self.lo {
            self.lo
        } else if mean > self.hi {
            self.hi
        } else {
            return;
        };
        let clipped_mean = |vels: &[f64], mu: f64| {
            vels.iter().map(|&v| (v + mu).clamp(0.0, self.capf)).sum::<f64>() / t
        };
        let mut lo_mu = -self.capf;
        let mut hi_mu = self.capf;
        for _ in 0..100 {
            let mid = 0.5 * (lo_mu + hi_mu);
            if clipped_mean(vels, mid) < target {
                lo_mu = mid;
            } else {
                hi_mu = mid;
            }
        }
        let mu = 0.5 * (lo_mu + hi_mu);
        for v in vels.iter_mut() {
            *v = (*v + mu).clamp(0.0, self.capf);
        }
    }

    /// Central finite differences of the (unnormalized) energy, one-sided
    /// at the box boundary. Cells below `j` are unaffected by `v_j`, so
    /// only the tail from `j` is recomputed.
    fn gradient(&self, vels: &[f64], h: f64, probs: &mut [f64], grad: &mut [f64]) {
        let mut s = 0.0;
        for j in 0..self.t {
            let vp = (vels[j] + h).min(self.capf);
            let vm = (vels[j] - h).max(0.0);
            let fp = self.tail(j, s, vp, vels, probs);
            let fm = self.tail(j, s, vm, vels, probs);
            grad[j] = if fp.is_finite() && fm.is_finite() && vp > vm {
                (fp - fm) / (vp - vm)
            } else {
                0.0
            };
            s += vels[j];
        }
    }

    /// One-coordinate golden-section sweeps inside the feasible slab.
    fn polish(&self, vels: &mut [f64], energy: &mut f64, sweeps: usize, probs: &mut [f64]) {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let t = self.t as f64;
        for _ in 0..sweeps {
            let mut mean = vels.iter().sum::<f64>() / t;
            let mut s = 0.0;
            for j in 0..self.t {
                let slack_up = (self.hi - mean).max(0.0) * t;
                let slack_dn = (mean - self.lo).max(0.0) * t;
                let mut a = (vels[j] - slack_dn).max(0.0);
                let mut b = (vels[j] + slack_up).min(self.capf);
                if b - a > 1e-12 {
                    let tail_at = |v: f64, probs: &mut [f64]| self.tail(j, s, v, vels, probs);
                    let mut x1 = b - INV_PHI * (b - a);
                    let mut x2 = a + INV_PHI * (b - a);
                    let mut f1 = tail_at(x1, probs);
                    let mut f2 = tail_at(x2, probs);
                    for _ in 0..24 {
                        if f1 <= f2 {
                            b = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = b - INV_PHI * (b - a);
                            f1 = tail_at(x1, probs);
                        } else {
                            a = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = a + INV_PHI * (b - a);
                            f2 = tail_at(x2, probs);
                        }
                    }
                    let (cand, fc) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
                    let current = tail_at(vels[j], probs);
                    if fc < current {
                        mean += (cand - vels[j]) / t;
                        vels[j] = cand;
                    }
                }
                s += vels[j];
            }
        }
        // Drift control: recompute the energy after a full sweep.
        *energy = self.energy(vels, probs);
    }
}

fn min_component_probability(urn: &Urn) -> f64 {
    let grid = urn.spec().grid_size();
    let mut probs = vec![0.0; urn.capacity() + 1];
    let mut min_p = f64::INFINITY;
    for i in 0..=grid {
        let alpha = urn.capacity_f64() * i as f64 / grid as f64;
        urn.pi_all_into(alpha, &mut probs);
        for &p in &probs {
            if p < min_p {
                min_p = p;
            }
        }
    }
    min_p
}

/// Runs one deterministic restart of the endpoint optimizer.
///
/// Restart `i` of `R` starts from a straight line whose slope spans the
/// event interval, except the last, which starts from the zero-cost flow
/// projected onto the feasible set. Public so external drivers can run
/// restarts in parallel and [`merge_restarts`] them identically.
pub fn optimize_restart(
    urn: &Urn,
    event: &EndpointEvent,
    grid_size: usize,
    options: &OptimizeOptions,
    index: usize,
) -> Result<RestartOutcome, VariationalError> {
    if grid_size == 0 {
        return Err(VariationalError::EmptyGrid);
    }
    if index >= options.restarts.max(1) {
        return Err(VariationalError::BadRestartIndex { index, restarts: options.restarts });
    }
    if !options.allow_infinite_cells && options.floor <= 0.0 {
        let min_pi = min_component_probability(urn);
        if min_pi <= 0.0 {
            return Err(VariationalError::DegenerateSpec { min_pi });
        }
    }

    let mut problem = EndpointProblem::new(urn, event, grid_size);
    problem.floor = options.floor;
    let restarts = options.restarts.max(1);
    let t = grid_size;

    let mut vels: Vec<f64> = if restarts >= 2 && index == restarts - 1 {
        zero_cost_flow(urn, t).path.velocities()
    } else {
        let straight_count = if restarts >= 2 { restarts - 1 } else { 1 };
        let frac = if straight_count <= 1 {
            0.5
        } else {
            index as f64 / (straight_count - 1) as f64
        };
        let slope = problem.lo + frac * (problem.hi - problem.lo);
        vec![slope; t]
    };
    problem.project(&mut vels);

    let mut probs = vec![0.0; urn.capacity() + 1];
    let mut energy = problem.energy(&vels, &mut probs);
    let mut grad = vec![0.0; t];
    let h = options.fd_step * urn.capacity_f64();
    let mut step = 0.25 * urn.capacity_f64();
    let mut iterations = 0;
    let mut tol_reached = false;

    if energy.is_finite() {
        for _ in 0..options.max_iters {
            iterations += 1;
            problem.gradient(&vels, h, &mut probs, &mut grad);
            let mut trial = step * 2.0;
            let mut improvement = 0.0;
            let mut accepted = false;
            for _ in 0..50 {
                let mut cand = vels.clone();
                for (c, &g) in cand.iter_mut().zip(grad.iter()) {
                    *c -= trial * g;
                }
                problem.project(&mut cand);
                let e = problem.energy(&cand, &mut probs);
                if e.is_finite() && e < energy {
                    improvement = energy - e;
                    energy = e;
                    vels = cand;
                    step = trial;
                    accepted = true;
                    break;
                }
                trial *= 0.5;
            }
            if !accepted || improvement < options.tol_obj * t as f64 {
                tol_reached = true;
                break;
            }
        }
        problem.polish(&mut vels, &mut energy, options.polish_sweeps, &mut probs);
    }

    let objective = if energy.is_finite() { energy / t as f64 } else { f64::INFINITY };
    Ok(RestartOutcome { index, objective, velocities: vels, iterations, tol_reached })
}

/// Reduces restart outcomes to the final [`RateResult`]: minimum objective
/// wins, ties broken by restart index.
pub fn merge_restarts(
    urn: &Urn,
    event: &EndpointEvent,
    options: &OptimizeOptions,
    mut outcomes: Vec<RestartOutcome>,
) -> Result<RateResult, VariationalError> {
    if outcomes.is_empty() {
        return Err(VariationalError::EmptyGrid);
    }
    let key = |o: &RestartOutcome| if o.objective.is_nan() { f64::INFINITY } else { o.objective };
    outcomes.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap().then(a.index.cmp(&b.index)));
    let best = &outcomes[0];
    let restarts_agreement = if outcomes.len() >= 2 { key(&outcomes[1]) - key(best) } else { 0.0 };

    let log_states = math::ln(urn.capacity_f64() + 1.0);
    let j = key(best);
    // The gauge constant cancels algebraically; both forms are the same
    // float because IEEE subtraction is antisymmetric.
    let entropy_density = match options.gauge {
        Gauge::Shifted => -(j - log_states),
        Gauge::Unshifted => log_states - j,
    } + 0.0;

    let optimal_path =
        DiscretePath::from_velocities(&best.velocities, urn.capacity()).expect("projected velocities are in the box");

    let oracle_gap = {
        let candidate = j - log_states;
        let mut cram = 0.0;
        for cell in 0..optimal_path.grid_size() {
            cram += cramer_local_rate(urn, optimal_path.velocity(cell), optimal_path.psi_mid(cell));
        }
        cram /= optimal_path.grid_size() as f64;
        if candidate.is_finite() && cram.is_finite() {
            Some(candidate - cram)
        } else {
            None
        }
    };

    let converged = best.tol_reached && restarts_agreement < options.tol_agree;
    Ok(RateResult {
        event: *event,
        entropy_density,
        optimal_path,
        iterations: best.iterations,
        converged,
        restarts_agreement,
        oracle_gap,
    })
}

/// Minimizes the candidate rate over discretized paths whose final average
/// lies in the event; reports `φ(E*) = −I` at the optimum.
pub fn optimize_endpoint(
    urn: &Urn,
    event: &EndpointEvent,
    grid_size: usize,
    options: &OptimizeOptions,
) -> Result<RateResult, VariationalError> {
    let restarts = options.restarts.max(1);
    let mut outcomes = Vec::with_capacity(restarts);
    for index in 0..restarts {
        outcomes.push(optimize_restart(urn, event, grid_size, options, index)?);
    }
    merge_restarts(urn, event, options, outcomes)
}

// ---------------------------------------------------------------------------
// Zero-cost flow
// ---------------------------------------------------------------------------

/// The candidate typical path `∂_τφ = π̄(ψ)` integrated forward, with its
/// per-cell rate profile.
#[derive(Debug, Clone)]
pub struct ZeroCostFlow {
    pub path: DiscretePath,
    /// `local_rate` at each cell (`NaN` marks indeterminate cells). For
    /// `K = 1` these vanish; for `K ≥ 2` they measure how far the
    /// candidate Lagrangian is from vanishing along the mean flow.
    pub cell_rates: Vec<f64>,
    /// Cramér oracle at the same `(v, ψ)` pairs.
    pub cramer_rates: Vec<f64>,
    /// All verified solutions of `v = π̄(v)`; the smallest seeds the flow.
    pub initial_candidates: Vec<f64>,
    pub initial_velocity: f64,
    /// Set when `π̄ ≡ id` on a sub-interval, so the seed is not isolated.
    pub continuum_initial: bool,
}

/// Integrates the zero-cost flow on `T` cells.
///
/// Each cell solves the self-consistent equation
/// `v = π̄((2·Σ_{i<j}v_i + v)/(2j+1))`, which at `j = 0` reduces to the
/// initial fixed point `v = π̄(v)`; a bracket always exists because
/// `π̄ − id` changes sign across `[0,K]`.
pub fn zero_cost_flow(urn: &Urn, grid_size: usize) -> ZeroCostFlow {
    let t = grid_size.max(1);
    let capf = urn.capacity_f64();

    let fixed = urn.fixed_points(2048, 1e-10);
    let continuum_initial = !fixed.isolation_violations.is_empty();
    let mut initial_candidates = fixed.roots.clone();
    if initial_candidates.is_empty() {
        if let Some(&(lo, _)) = fixed.isolation_violations.first() {
            initial_candidates.push(lo);
        }
    }
    let initial_velocity = initial_candidates.first().copied().unwrap_or(0.0);

    let mut velocities = Vec::with_capacity(t);
    let mut s = 0.0;
    for j in 0..t {
        let v = if j == 0 {
            initial_velocity
        } else {
            let denom = (2 * j + 1) as f64;
            let h = |v: f64| urn.mean_step_clamped(((2.0 * s + v) / denom).clamp(0.0, capf)) - v;
            solve::bisect(h, 0.0, capf, 1e-13 * capf.max(1.0), 200).x
        };
        velocities.push(v);
        s += v;
    }

    let path = DiscretePath::from_velocities(&velocities, urn.capacity())
        .expect("flow velocities stay inside [0, K]");
    let mut cell_rates = Vec::with_capacity(t);
    let mut cramer_rates = Vec::with_capacity(t);
    for j in 0..t {
        let v = path.velocity(j);
        let psi = path.psi_mid(j);
        cell_rates.push(local_rate(urn, v, psi, 0.0).unwrap_or(f64::NAN));
        cramer_rates.push(cramer_local_rate(urn, v, psi));
    }

    ZeroCostFlow { path, cell_rates, cramer_rates, initial_candidates, initial_velocity, continuum_initial }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::scaled_action;
    use crate::mogulskii::iid_action;
    use crate::testkit::{constant_k1, linear_k1, smooth_k2, two_point_k2, uniform_spec};

    fn binary_kl(x: f64, p: f64) -> f64 {
        let mut total = 0.0;
        if x > 0.0 {
            total += x * (x / p).ln();
        }
        if x < 1.0 {
            total += (1.0 - x) * ((1.0 - x) / (1.0 - p)).ln();
        }
        total
    }

    #[test]
    fn local_rate_is_relative_entropy_for_k1() {
        let urn = constant_k1(0.5);
        for &alpha in &[0.1, 0.25, 0.5, 0.8] {
            let r = local_rate(&urn, alpha, 0.3, 0.0).unwrap();
            assert!((r - binary_kl(alpha, 0.5)).abs() < 1e-10, "alpha={alpha}");
        }
        // Zero at the mean.
        let urn = constant_k1(0.37);
        assert!(local_rate(&urn, 0.37, 0.9, 0.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn uniform_local_rate_reduces_to_unshifted_l0() {
        let urn = uniform_spec(2);
        for &alpha in &[0.2, 0.7, 1.0, 1.6] {
            for &beta in &[0.1, 1.0, 1.9] {
                let r = local_rate(&urn, alpha, beta, 0.0).unwrap();
                let l0 = mogulskii_lagrangian(alpha, 2, false);
                assert!((r - l0).abs() < 1e-12, "alpha={alpha} beta={beta}");
            }
        }
    }

    #[test]
    fn degenerate_midpoint_candidate_vs_cramer() {
        // pi_0 = pi_2 = 1/2, pi_1 = 0: the candidate rate blows up at
        // alpha = 1 while the classical rate is zero (the mean is 1).
        let urn = two_point_k2();
        let r = local_rate(&urn, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(r, f64::INFINITY);
        let c = cramer_local_rate(&urn, 1.0, 0.5);
        assert!(c.abs() < 1e-12, "cramer = {c}");
    }

    #[test]
    fn cramer_matches_binary_kl() {
        let urn = constant_k1(0.5);
        let r = cramer_local_rate(&urn, 0.25, 0.0);
        assert!((r - binary_kl(0.25, 0.5)).abs() < 1e-10, "r = {r}");
        assert!((r - 0.13081).abs() < 5e-6);
    }

    #[test]
    fn cramer_zero_at_mean_step() {
        for urn in [smooth_k2(), uniform_spec(2), constant_k1(0.3)] {
            for &beta in &[0.0f64, 0.7, 1.0] {
                let beta = beta.min(urn.capacity_f64());
                let mean = urn.mean_step(beta).unwrap();
                let r = cramer_local_rate(&urn, mean, beta);
                assert!(r.abs() < 1e-9, "rate {r} at mean {mean}");
            }
        }
    }

    #[test]
    fn cramer_outside_support_is_infinite() {
        let urn = two_point_k2();
        // Support {0, 2}: any alpha beyond the hull is impossible...
        assert_eq!(cramer_local_rate(&urn, 2.5, 1.0), f64::INFINITY);
        // ...and the support edges cost -log pi_k.
        let edge = cramer_local_rate(&urn, 2.0, 1.0);
        assert!((edge - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rate_functional_equals_action_difference() {
        let urn = smooth_k2();
        let path = DiscretePath::from_velocities(
            &[0.4, 1.1, 0.9, 1.6, 0.2, 1.0, 1.3, 0.8],
            2,
        )
        .unwrap();
        let direct = rate_functional(&urn, &path, 0.0).unwrap();
        let via_actions =
            iid_action(&path, 2, true) - scaled_action(&urn, &path, 0.0).unwrap();
        assert!((direct - via_actions).abs() < 1e-12, "{direct} vs {via_actions}");
    }

    #[test]
    fn rate_functional_examples() {
        let urn = constant_k1(0.4);
        let path = DiscretePath::straight(64, 0.4, 1).unwrap();
        assert!(rate_functional(&urn, &path, 0.0).unwrap().abs() < 1e-10);

        let urn = uniform_spec(2);
        let path = DiscretePath::straight(64, 1.0, 2).unwrap();
        assert!(rate_functional(&urn, &path, 0.0).unwrap().abs() < 1e-12);

        let urn = constant_k1(0.5);
        let path = DiscretePath::straight(64, 0.25, 1).unwrap();
        let r = rate_functional(&urn, &path, 0.0).unwrap();
        assert!((r - 0.13081).abs() < 5e-6, "r = {r}");
    }

    #[test]
    fn optimizer_refuses_degenerate_spec_without_override() {
        let urn = linear_k1();
        let event = EndpointEvent::new(0.3, 0.31, 1).unwrap();
        let err = optimize_endpoint(&urn, &event, 20, &OptimizeOptions::default()).unwrap_err();
        assert!(matches!(err, VariationalError::DegenerateSpec { .. }));
        let opts = OptimizeOptions { allow_infinite_cells: true, ..Default::default() };
        assert!(optimize_endpoint(&urn, &event, 20, &opts).is_ok());
    }

    #[test]
    fn binomial_endpoint_rate() {
        let urn = constant_k1(0.5);
        let t = 100;
        let hi = 0.25 + 1.0 / t as f64;
        let event = EndpointEvent::new(0.25, hi, 1).unwrap();
        let result = optimize_endpoint(&urn, &event, t, &OptimizeOptions::default()).unwrap();
        // The infimum over the interval sits at the edge nearest the mean.
        let expected = -binary_kl(hi, 0.5);
        assert!(
            (result.entropy_density - expected).abs() < 2e-3,
            "entropy {} vs {expected}",
            result.entropy_density
        );
        assert!(result.converged, "agreement {}", result.restarts_agreement);
        // Optimal path is essentially straight at that edge.
        let straight = DiscretePath::straight(t, hi, 1).unwrap();
        let dist = crate::embedding::path_distance(&result.optimal_path, &straight).unwrap();
        assert!(dist < 1e-2, "sup distance {dist}");
    }

    #[test]
    fn uniform_typical_event_has_zero_rate() {
        let urn = uniform_spec(2);
        let t = 60;
        let event = EndpointEvent::new(1.0, 1.0, 2).unwrap();
        let result = optimize_endpoint(&urn, &event, t, &OptimizeOptions::default()).unwrap();
        assert!(result.entropy_density.abs() < 1e-6, "entropy {}", result.entropy_density);
        assert!(result.converged);
    }

    #[test]
    fn gauge_choice_is_bit_identical() {
        let urn = smooth_k2();
        let event = EndpointEvent::new(0.6, 0.7, 2).unwrap();
        let shifted = optimize_endpoint(&urn, &event, 40, &OptimizeOptions::default()).unwrap();
        let opts = OptimizeOptions { gauge: Gauge::Unshifted, ..Default::default() };
        let unshifted = optimize_endpoint(&urn, &event, 40, &opts).unwrap();
        assert_eq!(shifted.entropy_density.to_bits(), unshifted.entropy_density.to_bits());
        assert_eq!(shifted.optimal_path.values(), unshifted.optimal_path.values());
        assert_eq!(shifted.oracle_gap.map(f64::to_bits), unshifted.oracle_gap.map(f64::to_bits));
    }

    #[test]
    fn widening_never_raises_rate_of_nested_events() {
        let urn = constant_k1(0.5);
        let t = 60;
        let narrow = EndpointEvent::new(0.2, 0.25, 1).unwrap();
        let wide = EndpointEvent::new(0.2, 0.5, 1).unwrap();
        let opts = OptimizeOptions::default();
        let narrow_r = optimize_endpoint(&urn, &narrow, t, &opts).unwrap();
        let wide_r = optimize_endpoint(&urn, &wide, t, &opts).unwrap();
        assert!(
            wide_r.entropy_density >= narrow_r.entropy_density - 1e-9,
            "enlarging the event lowered the entropy: {} vs {}",
            wide_r.entropy_density,
            narrow_r.entropy_density
        );
    }

    #[test]
    fn optimal_path_averages_stay_in_range() {
        let urn = smooth_k2();
        let event = EndpointEvent::new(0.4, 0.5, 2).unwrap();
        let result = optimize_endpoint(&urn, &event, 50, &OptimizeOptions::default()).unwrap();
        for j in 0..=50 {
            let psi = result.optimal_path.psi(j);
            assert!((0.0..=2.0).contains(&psi));
        }
        let end = result.optimal_path.endpoint_average();
        assert!((0.4 - 0.02..=0.5 + 0.02).contains(&end), "endpoint {end}");
    }

    #[test]
    fn zero_cost_flow_constant_specs() {
        let urn = constant_k1(0.3);
        let flow = zero_cost_flow(&urn, 32);
        for (j, &r) in flow.cell_rates.iter().enumerate() {
            assert!(r.abs() <= 1e-10, "cell {j} rate {r}");
            assert!((flow.path.velocity(j) - 0.3).abs() < 1e-10);
        }
        assert!(!flow.continuum_initial);

        let urn = uniform_spec(2);
        let flow = zero_cost_flow(&urn, 32);
        for &r in &flow.cell_rates {
            assert!(r.abs() <= 1e-10);
        }
        assert!((flow.initial_velocity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_cost_flow_k1_curved_urn() {
        // pi_1(alpha) = 0.25 + 0.5*alpha has the attracting point 0.5.
        let urn = crate::urn::UrnSpec::new(1, vec![crate::urn::UrnCurve::Poly { coeffs: vec![0.25, 0.5] }])
            .unwrap()
            .into_urn()
            .unwrap();
        let flow = zero_cost_flow(&urn, 64);
        assert!((flow.initial_velocity - 0.5).abs() < 1e-9);
        for (j, &r) in flow.cell_rates.iter().enumerate() {
            assert!(r <= 1e-10, "cell {j} rate {r}");
        }
    }

    #[test]
    fn zero_cost_flow_reports_continuum_for_identity() {
        let urn = linear_k1();
        let flow = zero_cost_flow(&urn, 16);
        assert!(flow.continuum_initial);
        assert_eq!(flow.initial_velocity, 0.0);
    }

    #[test]
    fn restart_merge_prefers_lower_objective_then_index() {
        let urn = constant_k1(0.5);
        let event = EndpointEvent::new(0.3, 0.4, 1).unwrap();
        let opts = OptimizeOptions::default();
        let a = RestartOutcome { index: 3, objective: 1.0, velocities: vec![0.35; 10], iterations: 1, tol_reached: true };
        let b = RestartOutcome { index: 1, objective: 1.0, velocities: vec![0.30; 10], iterations: 2, tol_reached: true };
        let c = RestartOutcome { index: 0, objective: 2.0, velocities: vec![0.40; 10], iterations: 3, tol_reached: true };
        let merged = merge_restarts(&urn, &event, &opts, vec![a, b, c]).unwrap();
        assert_eq!(merged.iterations, 2, "index 1 wins the tie");
        assert_eq!(merged.restarts_agreement, 0.0);
    }
}
