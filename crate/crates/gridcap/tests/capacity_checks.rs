//! Capacity-layer checks: closed forms, Monte-Carlo oracles, sweeps, and
//! their file formats.

use gridcap::{
    LatticeKind, Scheme, SweepSpec, aloha_capacity, aloha_sigma, grid_capacity, log_spaced,
    mc_aloha_sigma, run_sweep, write_sweep_csv,
};

/// Pinned closed-form ALOHA values: c = sinc(2 pi / alpha) * beta^(-2/alpha).
#[test]
fn aloha_closed_form_values() {
    let cases = [
        (10.0, 4.0, 0.20131684841794817),
        (10.0, 3.0, 0.08908515734352523),
        (10.0, 100.0, 0.9543643501077239),
    ];
    for (beta, alpha, expected) in cases {
        let c = aloha_capacity(beta, alpha).unwrap().capacity;
        assert!(
            (c - expected).abs() < 1e-14,
            "c({beta}, {alpha}) = {c:.17}, expected {expected:.17}"
        );
    }
    // sigma scales as c / lambda.
    let sigma = aloha_sigma(1e-3, 10.0, 4.0).unwrap();
    assert!((sigma - 201.31684841794817).abs() < 1e-10);
}

#[test]
fn aloha_rejects_bad_density() {
    assert!(aloha_sigma(0.0, 10.0, 4.0).is_err());
    assert!(aloha_sigma(-1.0, 10.0, 4.0).is_err());
    assert!(aloha_sigma(f64::NAN, 10.0, 4.0).is_err());
}

/// Traced grid capacities at the reference parameters; values pinned to the
/// level the tracer reproduces across configurations.
#[test]
fn grid_capacity_reference_values() {
    let cases = [
        (LatticeKind::Square, 0.339549),
        (LatticeKind::Hexagonal, 0.304815),
        (LatticeKind::Triangular, 0.349437),
    ];
    for (kind, expected) in cases {
        let res = grid_capacity(kind, 25.0, 4.0, 10.0).unwrap();
        let rel = (res.capacity - expected).abs() / expected;
        assert!(rel < 5e-4, "{kind}: c = {:.6} vs pinned {expected}", res.capacity);
        // Internal consistency of the result record.
        assert!((res.capacity - res.lambda * res.sigma).abs() < 1e-12 * res.capacity);
        assert!((res.lambda - kind.density(25.0)).abs() < 1e-15);
    }
}

/// spacing_for_density inverts density for every lattice kind.
#[test]
fn spacing_density_roundtrip() {
    for kind in [LatticeKind::Square, LatticeKind::Hexagonal, LatticeKind::Triangular] {
        for d in [1.0, 25.0, 400.0] {
            let lambda = kind.density(d);
            let back = kind.spacing_for_density(lambda);
            assert!((back - d).abs() < 1e-12 * d, "{kind}: {d} -> {lambda} -> {back}");
        }
    }
}

/// The ALOHA Monte-Carlo oracle is seed-deterministic and statistically
/// consistent with the closed form.
#[test]
fn mc_aloha_determinism_and_ci() {
    let a = mc_aloha_sigma(1e-3, 10.0, 4.0, 4000, 9).unwrap();
    let b = mc_aloha_sigma(1e-3, 10.0, 4.0, 4000, 9).unwrap();
    assert_eq!(a.value, b.value, "same seed must reproduce bit-identically");
    let c = mc_aloha_sigma(1e-3, 10.0, 4.0, 4000, 10).unwrap();
    assert_ne!(a.value, c.value, "different seed should differ");

    let exact = aloha_sigma(1e-3, 10.0, 4.0).unwrap();
    assert!(
        (a.value - exact).abs() < 4.0 * a.ci_halfwidth,
        "mc {} +- {} vs exact {exact}",
        a.value,
        a.ci_halfwidth
    );
    assert_eq!(a.samples, 4000);
}

/// Sweeps record per-point failures without aborting, and attach Monte-Carlo
/// intervals only where requested.
#[test]
fn sweep_partial_failure_and_csv() {
    let spec = SweepSpec {
        schemes: vec![Scheme::Grid(LatticeKind::Square), Scheme::Aloha],
        betas: vec![0.5, 10.0],
        alphas: vec![4.0],
        lambda: 1.0 / 625.0,
        aloha_mc: Some((2000, 3)),
    };
    let points = run_sweep(&spec);
    assert_eq!(points.len(), 4);

    let grid_low = points
        .iter()
        .find(|p| p.scheme == Scheme::Grid(LatticeKind::Square) && p.beta == 0.5)
        .unwrap();
    assert!(grid_low.capacity.is_none());
    let msg = grid_low.error.as_deref().unwrap();
    assert!(msg.contains("> 1"), "error should explain the tracer domain: {msg}");

    let grid_ok = points
        .iter()
        .find(|p| p.scheme == Scheme::Grid(LatticeKind::Square) && p.beta == 10.0)
        .unwrap();
    assert!(grid_ok.capacity.is_some() && grid_ok.error.is_none());
    assert!(grid_ok.ci_halfwidth.is_none(), "grids are traced, not sampled");

    let aloha_low = points
        .iter()
        .find(|p| p.scheme == Scheme::Aloha && p.beta == 0.5)
        .unwrap();
    assert!(aloha_low.capacity.is_some(), "closed form accepts sub-unit beta");
    assert!(aloha_low.ci_halfwidth.is_some());

    let mut csv = Vec::new();
    write_sweep_csv(&points, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,beta,alpha,lambda,sigma,c,ci_halfwidth"
    );
    // One row per point; failed points keep the row with empty value fields.
    assert_eq!(text.lines().count(), 1 + points.len());
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        for v in &fields[1..4] {
            v.parse::<f64>().expect("beta/alpha/lambda parse as floats");
        }
    }
}

/// log_spaced covers both endpoints with monotone geometric spacing.
#[test]
fn log_spaced_grid() {
    assert!(log_spaced(0.0, 100.0, 13).is_err());
    assert!(log_spaced(1.0, 100.0, 1).is_err());
    let xs = log_spaced(0.5, 100.0, 13).unwrap();
    assert_eq!(xs.len(), 13);
    assert!((xs[0] - 0.5).abs() < 1e-12);
    assert!((xs[12] - 100.0).abs() < 1e-12);
    for w in xs.windows(2) {
        assert!(w[1] > w[0]);
    }
    let ratios: Vec<f64> = xs.windows(2).map(|w| w[1] / w[0]).collect();
    for r in &ratios {
        assert!((r - ratios[0]).abs() < 1e-9, "spacing not geometric");
    }
}
