//! Local capacity c = lambda * sigma: regular grids (traced) against slotted
//! ALOHA (closed form), with Monte-Carlo cross-checks and a beta sweep.
//!
//! Run with `cargo run --example capacity_comparison`.

use gridcap::capacity::{
    SweepSpec, aloha_capacity, grid_capacity, mc_aloha_sigma, mc_grid_coverage, run_sweep,
    write_sweep_csv,
};
use gridcap::{LatticeKind, Scheme};

fn main() {
    let (beta, alpha) = (10.0, 4.0);
    let d = 25.0;

    // Reference point: beta = 10, alpha = 4. Capacity is scale-free, so d
    // only fixes units; every grid is evaluated at its own density.
    println!("local capacity at beta = {beta}, alpha = {alpha}:");
    let mut traced = Vec::new();
    for kind in [
        LatticeKind::Square,
        LatticeKind::Hexagonal,
        LatticeKind::Triangular,
    ] {
        let r = grid_capacity(kind, d, alpha, beta).unwrap();
        // Quick Monte-Carlo cross-check on the same configuration.
        let mc = mc_grid_coverage(kind, d, alpha, beta, 100_000, 5).unwrap();
        println!(
            "  {:<11} c = {:.6} (sigma = {:>8.3} m^2, lambda = {:.4e})   mc {:.4} +- {:.4}",
            r.scheme.to_string(),
            r.capacity,
            r.sigma,
            r.lambda,
            mc.value,
            mc.ci_halfwidth
        );
        assert!((r.capacity - mc.value).abs() < 3.0 * mc.ci_halfwidth.max(1e-3));
        traced.push((kind, r.capacity));
    }
    let aloha = aloha_capacity(beta, alpha).unwrap();
    let mc = mc_aloha_sigma(aloha.lambda, beta, alpha, 20_000, 5).unwrap();
    println!(
        "  {:<11} c = {:.6} (closed form)                            mc {:.4} +- {:.4}",
        "aloha",
        aloha.capacity,
        mc.value * aloha.lambda,
        mc.ci_halfwidth * aloha.lambda
    );

    // The triangular grid wins, and no grid quite doubles ALOHA.
    let c = |k: LatticeKind| traced.iter().find(|(kk, _)| *kk == k).unwrap().1;
    let (c_sq, c_hex, c_tri) = (
        c(LatticeKind::Square),
        c(LatticeKind::Hexagonal),
        c(LatticeKind::Triangular),
    );
    println!("\nordering: triangular {c_tri:.4} > square {c_sq:.4} > hexagonal {c_hex:.4}");
    println!("triangular / aloha = {:.4}", c_tri / aloha.capacity);
    assert!(c_tri > c_sq && c_sq > c_hex);
    assert!(c_tri / aloha.capacity > 1.0 && c_tri / aloha.capacity < 2.0);

    // As alpha grows, path loss sharpens toward "nearest emitter wins" and
    // every scheme's capacity approaches 1.
    println!("\nalpha -> infinity limit (beta = {beta}):");
    for a in [4.0, 8.0, 16.0, 100.0] {
        let c_tri = grid_capacity(LatticeKind::Triangular, d, a, beta).unwrap().capacity;
        let c_al = aloha_capacity(beta, a).unwrap().capacity;
        println!("  alpha = {a:>5}: triangular {c_tri:.6}, aloha {c_al:.6}");
    }

    // A log-spaced beta sweep over every scheme, written as plot-ready CSV.
    let spec = SweepSpec {
        schemes: vec![
            Scheme::Grid(LatticeKind::Square),
            Scheme::Grid(LatticeKind::Hexagonal),
            Scheme::Grid(LatticeKind::Triangular),
            Scheme::Aloha,
        ],
        // Grid tracing needs beta > 1 (disjoint reception areas); the ALOHA
        // closed form would accept any positive beta.
        betas: vec![2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
        alphas: vec![alpha],
        lambda: 1.0 / (d * d),
        aloha_mc: None,
    };
    let points = run_sweep(&spec);
    let mut csv = Vec::new();
    write_sweep_csv(&points, &mut csv).unwrap();
    println!("\nbeta sweep (alpha = {alpha}, shared lambda = {:.4e}):", spec.lambda);
    print!("{}", String::from_utf8(csv).unwrap());

    // Monotonicity: capacity falls as the threshold rises, for every scheme.
    for scheme in &spec.schemes {
        let cs: Vec<f64> = points
            .iter()
            .filter(|p| p.scheme == *scheme)
            .map(|p| p.capacity.unwrap())
            .collect();
        assert!(cs.windows(2).all(|w| w[1] < w[0]), "{scheme} not monotone");
    }
}
