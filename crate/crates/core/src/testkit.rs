//! Spec builders shared by the unit tests.

use alloc::vec;

use crate::urn::{Urn, UrnCurve, UrnSpec};

/// `π_k ≡ 1/(K+1)` for all k: i.i.d. uniform steps.
pub(crate) fn uniform_spec(capacity: usize) -> Urn {
    let p = 1.0 / (capacity as f64 + 1.0);
    let components = vec![UrnCurve::constant(p); capacity];
    UrnSpec::new(capacity, components).unwrap().into_urn().unwrap()
}

/// Binary urn with constant `π₁ ≡ p`.
pub(crate) fn constant_k1(p: f64) -> Urn {
    UrnSpec::new(1, vec![UrnCurve::constant(p)]).unwrap().into_urn().unwrap()
}

/// Binary urn with `π₁(α) = α` (each point of [0,1] is a fixed point).
pub(crate) fn linear_k1() -> Urn {
    UrnSpec::new(1, vec![UrnCurve::Poly { coeffs: vec![0.0, 1.0] }])
        .unwrap()
        .into_urn()
        .unwrap()
}

/// Smooth K=2 spec with every component bounded away from zero:
/// `π₁ = 0.2 + 0.05α`, `π₂ = 0.4 − 0.075α`.
pub(crate) fn smooth_k2() -> Urn {
    UrnSpec::new(2, vec![
        UrnCurve::Poly { coeffs: vec![0.2, 0.05] },
        UrnCurve::Poly { coeffs: vec![0.4, -0.075] },
    ])
    .unwrap()
    .into_urn()
    .unwrap()
}

/// Degenerate K=2 spec `π₀ = π₂ ≡ 1/2`, `π₁ ≡ 0` (support {0, 2}).
pub(crate) fn two_point_k2() -> Urn {
    UrnSpec::new(2, vec![UrnCurve::constant(0.0), UrnCurve::constant(0.5)])
        .unwrap()
        .into_urn()
        .unwrap()
}
