//! Emitter point patterns: the three regular lattices, a Poisson draw, and a
//! custom set, with their densities and nearest-neighbor geometry.
//!
//! Run with `cargo run --example lattice_patterns`.

use gridcap::{EmitterSet, LatticeKind, Vec2, Window};

fn main() {
    let d = 25.0;
    let window = Window::centered_square(200.0).unwrap();

    println!("spacing d = {d} m, window 200 x 200 m centered at the origin\n");
    println!(
        "{:<12} {:>8} {:>14} {:>14} {:>10}",
        "kind", "points", "density", "analytic", "nn dist"
    );
    for kind in [
        LatticeKind::Square,
        LatticeKind::Hexagonal,
        LatticeKind::Triangular,
    ] {
        let set = EmitterSet::lattice(kind, d, window, Vec2::ZERO).unwrap();
        let measured = set.len() as f64 / window.area();
        println!(
            "{:<12} {:>8} {:>14.6e} {:>14.6e} {:>10.3}",
            kind.to_string(),
            set.len(),
            measured,
            kind.density(d),
            set.nn_distance(),
        );
        // Every kind puts an emitter exactly at the window center.
        let center = set.center_index().unwrap();
        assert_eq!(set.positions()[center], Vec2::ZERO);
    }

    // A Poisson pattern with the square lattice's density; same seed, same
    // points, byte for byte.
    let lambda = 1.0 / (d * d);
    let a = EmitterSet::poisson(lambda, window, 7).unwrap();
    let b = EmitterSet::poisson(lambda, window, 7).unwrap();
    assert_eq!(a.positions(), b.positions());
    println!(
        "{:<12} {:>8} {:>14.6e} {:>14.6e} {:>10.3}",
        "poisson",
        a.len(),
        a.len() as f64 / window.area(),
        lambda,
        a.nn_distance(),
    );

    // Custom sets take explicit positions and validate them (windowed,
    // deduplicated).
    let pair = EmitterSet::custom(vec![Vec2::ZERO, Vec2::new(d, 0.0)], window).unwrap();
    println!(
        "{:<12} {:>8} {:>14} {:>14} {:>10.3}",
        "custom",
        pair.len(),
        "-",
        "-",
        pair.nn_distance(),
    );

    // Each set serializes to a positions CSV plus a TOML metadata sidecar.
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    println!("\npoisson CSV head:");
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    println!("\npoisson metadata:\n{}", a.metadata_toml());
}
