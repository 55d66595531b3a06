//! Linear response of a reception area to global affine deformations
//! z -> (I + tA) z of the whole emitter configuration.
//!
//! To first order the area can only respond to the dilation part of the
//! deformation: d sigma / dt = sigma0 * tr(A). A uniform dilation (A = I)
//! gives 2 sigma0, while rotations, shears, and traceless stretches leave
//! the area unchanged at first order. Equivalently, the full response
//! matrix R_ab = d sigma / d t|_{A = E_ab} equals sigma0 * I.
//!
//! Run with `cargo run --example linear_response`.

use gridcap::optimality::{estimate_response_matrix, linear_response};
use gridcap::{EmitterSet, FieldParams, LatticeKind, Mat2, SirField, TracerConfig, Vec2, Window};

fn main() {
    let (d, beta, alpha) = (25.0, 10.0, 4.0);
    // A window this size keeps the interference truncation disk well inside
    // the emitter set, so deforming the set never pops interferers across
    // the truncation rim.
    let window = Window::centered_square(2000.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO).unwrap();
    let params = FieldParams::new(alpha, beta).unwrap();
    let field = SirField::new(&set, params).unwrap();
    let (center, _) = field.nearest_emitter(Vec2::ZERO).unwrap();
    let tracer = TracerConfig::for_spacing(d);
    let t = 1e-4;

    let named: [(&str, Mat2); 4] = [
        ("identity", Mat2::IDENTITY),
        ("rotation", Mat2::ROTATION_GENERATOR),
        ("shear", Mat2::SHEAR),
        ("stretch", Mat2::STRETCH),
    ];

    println!("square lattice, d = {d} m, beta = {beta}, alpha = {alpha}, half-step t = {t}");
    println!();
    println!(
        "{:<10} {:>8} {:>16} {:>16} {:>12}",
        "A", "tr(A)", "d sigma/dt", "sigma0 tr(A)", "deviation"
    );

    let mut sigma0 = 0.0;
    for (name, a) in named {
        let rep = linear_response(&set, params, center, a, t, &tracer).unwrap();
        sigma0 = rep.sigma_base;
        println!(
            "{:<10} {:>8} {:>16.6} {:>16.6} {:>12.3e}",
            name,
            a.trace(),
            rep.derivative,
            rep.predicted,
            rep.deviation
        );

        // The dilation channel carries the whole response ...
        if a.trace() != 0.0 {
            assert!(
                rep.deviation.abs() < 5e-3 * rep.predicted.abs(),
                "{name}: derivative {} far from predicted {}",
                rep.derivative,
                rep.predicted
            );
        } else {
            // ... and the traceless channels carry none of it.
            assert!(
                rep.derivative.abs() < 1e-2 * 2.0 * rep.sigma_base,
                "{name}: unexpected first-order response {}",
                rep.derivative
            );
        }
    }

    // Assemble the response matrix from the four elementary generators; it
    // reproduces sigma0 * I entry by entry.
    let mat = estimate_response_matrix(&set, params, center, t, &tracer).unwrap();
    let r = mat.response;
    println!();
    println!("response matrix R (d sigma / dt per elementary generator):");
    println!("  [{:>12.6} {:>12.6}]", r.xx, r.xy);
    println!("  [{:>12.6} {:>12.6}]", r.yx, r.yy);
    println!("  sigma0 = {:.6} m^2", mat.sigma_base);

    for (entry, kronecker) in [(r.xx, 1.0), (r.xy, 0.0), (r.yx, 0.0), (r.yy, 1.0)] {
        assert!(
            (entry - kronecker * sigma0).abs() < 1e-2 * sigma0,
            "response matrix entry {entry} deviates from sigma0 * I"
        );
    }
    println!("  R matches sigma0 * I entry by entry");
}
