//! Generalized Hill–Lane–Sudderth urns with increments in {0,…,K}.
//!
//! An HLS urn is a reinforced process: at step `n+1` an increment
//! `σ_{n+1} ∈ {0,…,K}` is drawn with probabilities `π_k(ψ_n)` that depend on
//! the running average `ψ_n = (σ_1 + … + σ_n)/n` of all previous increments.
//! The classic model is the binary case `K = 1`; this crate handles any
//! finite capacity.
//!
//! The crate provides three layers:
//!
//! - [`urn`] — the process itself: urn-function vectors, validation, exact
//!   finite-`N` laws by dynamic programming, seeded sampling, path weights
//!   and the log-weight action.
//! - [`embedding`] and [`mogulskii`] — the scaling-limit functionals: the
//!   interpolated Kronecker basis `δ_k`, the scaled Lagrangian
//!   `L(α,β) = Σ_k δ_k(α) log π_k(β)` integrated over `K`-Lipschitz paths,
//!   and the i.i.d. reference rate `L₀` obtained by Legendre transform of
//!   the uniform-step free energy.
//! - [`variational`] — the endpoint-event rate solver minimizing
//!   `Φ₀ − Φ` over discretized paths, the zero-cost flow, and an
//!   independent Cramér-transform oracle for cross-checking the candidate
//!   local rate.
//!
//! The core is `no_std` + `alloc`; all floating-point transcendentals go
//! through `libm`. Everything is deterministic given explicit seeds.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod embedding;
mod math;
pub mod mogulskii;
pub mod solve;
#[cfg(test)]
pub(crate) mod testkit;
pub mod urn;
pub mod variational;

pub use embedding::{
    embed_path, kron_delta, path_distance, scaled_action, scaled_lagrangian, DiscretePath,
    Indeterminate, PathError,
};
pub use mogulskii::{
    dzeta0, iid_action, mogulskii_lagrangian, xi_invert, zeta0, MogulskiiError, XiSolution,
};
pub use urn::{
    action, event_probability, exact_distribution, path_weight, simulate, step_weight,
    EndpointEvent, FixedPointReport, MarketHistory, SpecError, Urn, UrnCurve, UrnError, UrnSpec,
    ValidationReport, Violation,
};
pub use variational::{
    cramer_local_rate, local_rate, merge_restarts, optimize_endpoint, optimize_restart,
    rate_functional, zero_cost_flow, Gauge, OptimizeOptions, RateResult, RestartOutcome,
    VariationalError, ZeroCostFlow,
};

/// Derives an independent stream seed from a master seed.
///
/// SplitMix64 finalizer; batch `i` of a Monte Carlo run uses
/// `derive_seed(master, i)` so batches can run in any order (or in
/// parallel) and still reproduce bit-identical results.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
