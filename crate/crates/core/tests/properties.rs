//! Property tests for the structural invariants.

use proptest::prelude::*;
use urn_ldp::{
    action, embed_path, exact_distribution, kron_delta, mogulskii_lagrangian, path_weight,
    scaled_action, zeta0, DiscretePath, MarketHistory, UrnCurve, UrnSpec,
};

proptest! {
    /// Lagrange basis on {0..K} reproduces the constant one everywhere.
    #[test]
    fn kron_partition_of_unity(capacity in 1usize..=8, frac in 0.0f64..=1.0) {
        let alpha = -1.0 + frac * (capacity as f64 + 2.0);
        let sum: f64 = (0..=capacity).map(|k| kron_delta(capacity, k, alpha)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "K={capacity} alpha={alpha} sum={sum}");
    }

    /// Embedded histories hit M_j/N exactly and satisfy the path invariants.
    #[test]
    fn embedding_reproduces_running_sums(steps in prop::collection::vec(0u8..=2, 1..200)) {
        let n = steps.len();
        let history = MarketHistory::new(steps, 2, 1.0).unwrap();
        let path = embed_path(&history);
        prop_assert_eq!(path.grid_size(), n);
        prop_assert_eq!(path.values()[0], 0.0);
        let sums = history.running_sums();
        for j in 1..=n {
            prop_assert_eq!(path.values()[j], sums[j - 1] as f64 / n as f64);
        }
        for j in 0..n {
            let v = path.velocity(j);
            prop_assert!((v - history.steps()[j] as f64).abs() < 1e-9);
        }
    }

    /// For constant urn vectors the process is i.i.d.: the weight only
    /// depends on increment counts, not their order.
    #[test]
    fn constant_urn_action_is_order_invariant(
        steps in prop::collection::vec(0u8..=2, 1..60),
        p1 in 0.05f64..0.45,
        p2 in 0.05f64..0.45,
    ) {
        let urn = UrnSpec::new(2, vec![UrnCurve::constant(p1), UrnCurve::constant(p2)])
            .unwrap()
            .into_urn()
            .unwrap();
        let forward = MarketHistory::new(steps.clone(), 2, 1.0).unwrap();
        let mut rev = steps.clone();
        rev.reverse();
        let reversed = MarketHistory::new(rev, 2, 1.0).unwrap();
        let a = action(&urn, &forward);
        let b = action(&urn, &reversed);
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");

        // And the weight is the product of marginals.
        let probs = [1.0 - p1 - p2, p1, p2];
        let marginal: f64 = steps.iter().map(|&s| probs[s as usize]).product();
        prop_assert!((path_weight(&urn, &forward) - marginal).abs() < 1e-12);
    }

    /// Law of total probability for the exact law of small random specs.
    #[test]
    fn exact_law_is_normalized(
        p1 in 0.0f64..0.6,
        p2 in 0.0f64..0.4,
        n in 1usize..=8,
        psi_frac in 0.0f64..=1.0,
    ) {
        let urn = UrnSpec::new(2, vec![UrnCurve::constant(p1), UrnCurve::constant(p2)])
            .unwrap()
            .into_urn()
            .unwrap();
        let dist = exact_distribution(&urn, n, 2.0 * psi_frac).unwrap();
        let total: f64 = dist.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "total = {total}");
        prop_assert!(dist.iter().all(|&p| p >= 0.0));
    }

    /// The Legendre transform dominates every explicit tilt.
    #[test]
    fn mogulskii_duality(capacity in 1usize..=6, frac in 0.01f64..=0.99, beta in -20.0f64..20.0) {
        let alpha = capacity as f64 * frac;
        let l0 = mogulskii_lagrangian(alpha, capacity, false);
        let tilt = alpha * beta - zeta0(beta, capacity);
        prop_assert!(l0 >= tilt - 1e-10, "L0({alpha}) = {l0} < {tilt}");
    }

    /// Uniform specs give a constant Lagrangian, so every embedded path
    /// has the same scaled action.
    #[test]
    fn uniform_action_is_path_independent(steps in prop::collection::vec(0u8..=2, 1..100)) {
        let urn = UrnSpec::new(2, vec![UrnCurve::constant(1.0 / 3.0); 2])
            .unwrap()
            .into_urn()
            .unwrap();
        let history = MarketHistory::new(steps, 2, 1.0).unwrap();
        let phi = scaled_action(&urn, &embed_path(&history), 0.0).unwrap();
        prop_assert!((phi + 3.0f64.ln()).abs() < 1e-12);
    }

    /// Straight-path velocities round-trip through construction.
    #[test]
    fn straight_paths_have_constant_velocity(slope_frac in 0.0f64..=1.0, t in 1usize..200) {
        let slope = 2.0 * slope_frac;
        let path = DiscretePath::straight(t, slope, 2).unwrap();
        for j in 0..t {
            prop_assert!((path.velocity(j) - slope).abs() < 1e-9);
        }
        prop_assert!((path.endpoint_average() - slope).abs() < 1e-12);
    }
}
