//! The SIR field: signal-to-interference evaluation, power shares, analytic
//! gradients, and interference truncation.
//!
//! Run with `cargo run --example sir_field_basics`.

use gridcap::{EmitterSet, FieldParams, LatticeKind, SirField, Truncation, Vec2, Window};

fn main() {
    let d = 25.0;
    let window = Window::centered_square(600.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO).unwrap();
    let params = FieldParams::new(4.0, 10.0).unwrap();
    let field = SirField::new(&set, params).unwrap();
    let center = set.center_index().unwrap();

    println!(
        "square lattice, d = {d} m, {} emitters, alpha = 4, beta = 10",
        set.len()
    );
    println!(
        "interference truncated at r_t = {:.1} m (relative tail {:.1e})\n",
        field.truncation_radius(),
        field.tail_bound(),
    );

    // SIR from the center emitter along the axis toward its neighbor: large
    // close in, below 1 at the midpoint (the rest of the lattice interferes
    // too, so the two-emitter symmetry value of 1 is not reached).
    println!("{:>8} {:>14} {:>12} {:>10}", "x (m)", "SIR", "share", "covered");
    for x in [1.0, 5.0, 8.0, 10.0, 12.5, 15.0] {
        let z = Vec2::new(x, 0.0);
        let sir = field.sir(center, z);
        let share = field.power_share(center, z);
        let covered = field.coverage_count(z);
        println!("{x:>8.1} {sir:>14.4} {share:>12.6} {covered:>10}");
        // share = SIR / (1 + SIR) always, covered means SIR >= beta.
        assert!((share - sir / (1.0 + sir)).abs() < 1e-12);
        assert_eq!(covered >= 1, sir >= params.beta);
    }

    // The analytic gradient matches a central difference to high accuracy.
    let z = Vec2::new(7.3, 4.1);
    let (sir, grad) = field.sir_and_gradient(center, z).unwrap();
    let h = 1e-5;
    let fd = Vec2::new(
        (field.sir(center, z + Vec2::new(h, 0.0)) - field.sir(center, z - Vec2::new(h, 0.0)))
            / (2.0 * h),
        (field.sir(center, z + Vec2::new(0.0, h)) - field.sir(center, z - Vec2::new(0.0, h)))
            / (2.0 * h),
    );
    let rel = (grad - fd).norm() / grad.norm();
    println!("\nat z = ({}, {}): SIR = {sir:.6}", z.x, z.y);
    println!("analytic gradient  = ({:+.6e}, {:+.6e})", grad.x, grad.y);
    println!("central difference = ({:+.6e}, {:+.6e})  (rel {rel:.1e})", fd.x, fd.y);
    assert!(rel < 1e-6);

    // Truncation policies: the relative-tail default, a hard radius, and
    // none. Tighter truncation biases the interference sum down, so the SIR
    // estimate only grows.
    println!("\nSIR at the same point under different truncations:");
    for (name, trunc) in [
        ("relative tail 1e-3", Truncation::RelativeTail { epsilon: 1e-3 }),
        ("radius 100 m", Truncation::Radius(100.0)),
        ("none", Truncation::None),
    ] {
        let p = FieldParams::new(4.0, 10.0).unwrap().with_truncation(trunc).unwrap();
        let f = SirField::new(&set, p).unwrap();
        println!("  {name:<20} SIR = {:.10}", f.sir(center, z));
    }

    // Moving one emitter produces a cheap overlay field; base positions stay
    // visible for membership decisions that must not drift.
    let moved = field.with_moved(center, Vec2::new(0.5, 0.0)).unwrap();
    println!(
        "\noverlay: emitter {center} moved to ({}, {}), base still ({}, {})",
        moved.position(center).x,
        moved.position(center).y,
        moved.base_position(center).x,
        moved.base_position(center).y,
    );
}
