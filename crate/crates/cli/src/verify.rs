//! End-to-end verification: reproduces the closed-form binary-urn results
//! and the three-increment formulas against independent routes, plus a
//! seeded sampling check. The report is deterministic byte-for-byte given
//! the seed.

use urn_ldp::{
    cramer_local_rate, derive_seed, event_probability, exact_distribution, kron_delta, local_rate,
    mogulskii_lagrangian, optimize_endpoint, scaled_lagrangian, simulate, xi_invert,
    EndpointEvent, OptimizeOptions, Urn, UrnCurve, UrnSpec,
};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn constant_k1(p: f64) -> Urn {
    UrnSpec::new(1, vec![UrnCurve::constant(p)]).unwrap().into_urn().unwrap()
}

fn uniform(capacity: usize) -> Urn {
    let p = 1.0 / (capacity as f64 + 1.0);
    UrnSpec::new(capacity, vec![UrnCurve::constant(p); capacity])
        .unwrap()
        .into_urn()
        .unwrap()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn kron_partition_of_unity() -> Check {
    let mut max_dev: f64 = 0.0;
    for capacity in 1..=8usize {
        let span = capacity as f64 + 2.0;
        for i in 0..=2000 {
            let alpha = -1.0 + span * i as f64 / 2000.0;
            let sum: f64 = (0..=capacity).map(|k| kron_delta(capacity, k, alpha)).sum();
            max_dev = max_dev.max((sum - 1.0).abs());
        }
    }
    Check {
        name: "kron-partition-of-unity",
        pass: max_dev <= 1e-12,
        detail: format!("max |sum - 1| = {} over K = 1..8", fmt(max_dev)),
    }
}

fn kron_integer_nodes() -> Check {
    let mut ok = true;
    for capacity in 1..=8usize {
        for k in 0..=capacity {
            for z in 0..=capacity {
                let expected = if z == k { 1.0 } else { 0.0 };
                if kron_delta(capacity, k, z as f64) != expected {
                    ok = false;
                }
            }
        }
    }
    Check {
        name: "kron-integer-nodes",
        pass: ok,
        detail: "delta_k(z) = [z = k] exactly at integer nodes".to_string(),
    }
}

fn k1_xi_closed_form() -> Check {
    let mut max_dev: f64 = 0.0;
    for i in 1..512 {
        let alpha = i as f64 / 512.0;
        let sol = xi_invert(alpha, 1).unwrap();
        max_dev = max_dev.max((sol.xi - alpha / (1.0 - alpha)).abs());
    }
    Check {
        name: "k1-xi-closed-form",
        pass: max_dev <= 1e-10,
        detail: format!("max |xi - alpha/(1-alpha)| = {}", fmt(max_dev)),
    }
}

fn k1_mogulskii_closed_form() -> Check {
    let mut max_dev: f64 = 0.0;
    for i in 0..=512 {
        let alpha = i as f64 / 512.0;
        let closed = if alpha == 0.0 || alpha == 1.0 {
            2.0f64.ln()
        } else {
            2.0f64.ln() + alpha * alpha.ln() + (1.0 - alpha) * (1.0 - alpha).ln()
        };
        max_dev = max_dev.max((mogulskii_lagrangian(alpha, 1, false) - closed).abs());
    }
    Check {
        name: "k1-mogulskii-closed-form",
        pass: max_dev <= 1e-10,
        detail: format!("max |L0 - binary entropy form| = {}", fmt(max_dev)),
    }
}

fn k2_cubic_inversion() -> Check {
    // Two independent routes to xi(alpha, 2): the implicit-equation solver
    // and the explicit root of the cleared-denominator cubic, whose
    // non-spurious factor is the quadratic (a-2)x^2 + (a-1)x + a = 0.
    let mut max_residual: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for i in 1..=39 {
        let alpha = 2.0 * i as f64 / 40.0;
        let sol = xi_invert(alpha, 2).unwrap();
        let xi = sol.xi;
        let residual = ((alpha - 2.0) * xi * xi * xi + xi * xi + xi - alpha).abs();
        max_residual = max_residual.max(residual);
        let disc = (-3.0 * alpha * alpha + 6.0 * alpha + 1.0).sqrt();
        let quad_root = ((1.0 - alpha) - disc) / (2.0 * (alpha - 2.0));
        max_gap = max_gap.max((xi - quad_root).abs());
    }
    Check {
        name: "k2-cubic-inversion",
        pass: max_residual <= 1e-10 && max_gap <= 1e-9,
        detail: format!(
            "max cubic residual = {}, max gap to quadratic root = {}",
            fmt(max_residual),
            fmt(max_gap)
        ),
    }
}

fn k2_lagrangian_structure() -> Check {
    // The three-increment Lagrangian must expand over the basis
    // delta_0 = (1-a)(1-a/2), delta_1 = a(2-a), delta_2 = (a/2)(a-1);
    // the last sign is pinned by the partition of unity at a = 2.
    let urn = UrnSpec::new(2, vec![
        UrnCurve::Poly { coeffs: vec![0.2, 0.05] },
        UrnCurve::Poly { coeffs: vec![0.4, -0.075] },
    ])
    .unwrap()
    .into_urn()
    .unwrap();
    let mut max_dev: f64 = 0.0;
    for i in 0..=8 {
        let alpha = 2.0 * i as f64 / 8.0;
        for j in 0..=8 {
            let beta = 2.0 * j as f64 / 8.0;
            let p1 = urn.pi(1, beta).unwrap();
            let p2 = urn.pi(2, beta).unwrap();
            let p0 = urn.pi(0, beta).unwrap();
            let explicit = alpha * (2.0 - alpha) * p1.ln()
                + (alpha / 2.0) * (alpha - 1.0) * p2.ln()
                + (1.0 - alpha) * (1.0 - alpha / 2.0) * p0.ln();
            let l = scaled_lagrangian(&urn, alpha, beta, 0.0).unwrap();
            max_dev = max_dev.max((l - explicit).abs());
        }
    }
    Check {
        name: "k2-lagrangian-structure",
        pass: max_dev <= 1e-12,
        detail: format!("max |L - basis expansion| = {}", fmt(max_dev)),
    }
}

fn k2_mogulskii_shape() -> Check {
    let grid = 64;
    let mut values = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        values.push(mogulskii_lagrangian(2.0 * i as f64 / grid as f64, 2, false));
    }
    let mut max_asym: f64 = 0.0;
    let mut min_second_diff = f64::INFINITY;
    for i in 0..=grid {
        max_asym = max_asym.max((values[i] - values[grid - i]).abs());
    }
    for w in values.windows(3) {
        min_second_diff = min_second_diff.min(w[0] - 2.0 * w[1] + w[2]);
    }
    let at_mid = values[grid / 2].abs();
    let at_ends = (values[0] - 3.0f64.ln()).abs().max((values[grid] - 3.0f64.ln()).abs());
    let pass = max_asym <= 1e-9 && min_second_diff >= -1e-8 && at_mid <= 1e-12 && at_ends <= 1e-12;
    Check {
        name: "k2-mogulskii-table",
        pass,
        detail: format!(
            "max asymmetry = {}, min second difference = {}, |L0(1)| = {}, end offset = {}",
            fmt(max_asym),
            fmt(min_second_diff),
            fmt(at_mid),
            fmt(at_ends)
        ),
    }
}

/// Least-squares intercept of `values` against `1/N` as `N → ∞`.
fn extrapolate_in_inverse_n(ns: &[usize], values: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let count = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / count;
    let mean_y = values.iter().sum::<f64>() / count;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(values.iter()) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    let slope = num / den;
    mean_y - slope * mean_x
}

fn k1_endpoint_rate_vs_enumeration() -> Check {
    let urn = constant_k1(0.5);
    let t = 100;
    let ns = [250usize, 500, 1000];
    let opts = OptimizeOptions { restarts: 4, ..Default::default() };
    let mut max_gap: f64 = 0.0;
    let mut details = Vec::new();
    for (lo, hi) in [(0.25, 0.26), (0.6, 0.61)] {
        let event = EndpointEvent::new(lo, hi, 1).unwrap();
        let result = optimize_endpoint(&urn, &event, t, &opts).unwrap();
        let rates: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let dist = exact_distribution(&urn, n, 0.5).unwrap();
                -(event_probability(&dist, n, &event)).ln() / n as f64
            })
            .collect();
        let enumerated = extrapolate_in_inverse_n(&ns, &rates);
        let gap = (-result.entropy_density - enumerated).abs();
        max_gap = max_gap.max(gap);
        details.push(format!("[{lo},{hi}]: gap = {}", fmt(gap)));
    }
    Check {
        name: "k1-endpoint-rate-vs-enumeration",
        pass: max_gap <= 5e-3,
        detail: details.join("; "),
    }
}

fn cramer_degenerate_midpoint() -> Check {
    // pi_0 = pi_2 = 1/2, pi_1 = 0: candidate local rate diverges at the
    // distribution's own mean while the classical rate vanishes.
    let urn = UrnSpec::new(2, vec![UrnCurve::constant(0.0), UrnCurve::constant(0.5)])
        .unwrap()
        .into_urn()
        .unwrap();
    let candidate = local_rate(&urn, 1.0, 0.7, 0.0).unwrap();
    let classical = cramer_local_rate(&urn, 1.0, 0.7);
    Check {
        name: "cramer-degenerate-midpoint",
        pass: candidate == f64::INFINITY && classical.abs() <= 1e-12,
        detail: format!("local_rate = {candidate}, cramer_local_rate = {}", fmt(classical)),
    }
}

fn uniform_sample_frequencies(seed: u64) -> Check {
    let urn = uniform(2);
    let n = 30_000;
    let h = simulate(&urn, n, 1.0, derive_seed(seed, 1)).unwrap();
    let mut counts = [0u64; 3];
    for &s in h.steps() {
        counts[s as usize] += 1;
    }
    let sigma = (2.0 / 9.0 / n as f64).sqrt();
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let max_dev = freqs.iter().map(|f| (f - 1.0 / 3.0).abs()).fold(0.0f64, f64::max);
    Check {
        name: "uniform-sample-frequencies",
        pass: max_dev < 3.0 * sigma,
        detail: format!(
            "freqs = [{}, {}, {}], max |f - 1/3| = {} vs 3 sigma = {}",
            fmt(freqs[0]),
            fmt(freqs[1]),
            fmt(freqs[2]),
            fmt(max_dev),
            fmt(3.0 * sigma)
        ),
    }
}

/// Runs every check; returns the printable report and whether all passed.
pub fn run(seed: u64) -> (String, bool) {
    let checks = vec![
        kron_partition_of_unity(),
        kron_integer_nodes(),
        k1_xi_closed_form(),
        k1_mogulskii_closed_form(),
        k2_cubic_inversion(),
        k2_lagrangian_structure(),
        k2_mogulskii_shape(),
        k1_endpoint_rate_vs_enumeration(),
        cramer_degenerate_midpoint(),
        uniform_sample_frequencies(seed),
    ];
    let mut out = String::new();
    out.push_str(&format!("verification report (seed = {seed})\n"));
    let mut passed = 0;
    for check in &checks {
        let tag = if check.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!("{tag} {}: {}\n", check.name, check.detail));
        if check.pass {
            passed += 1;
        }
    }
    out.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    (out, passed == checks.len())
}
