//! Pointwise identities and invariances of the SIR field, checked over
//! randomized query points and parameters.

use gridcap::{
    EmitterSet, FieldParams, LatticeKind, SirField, Truncation, Vec2, Window, share_threshold,
};
use proptest::prelude::*;

fn square_field(beta: f64, alpha: f64) -> SirField {
    let window = Window::centered_square(300.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, 25.0, window, Vec2::ZERO).unwrap();
    SirField::new(&set, FieldParams::new(alpha, beta).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// share = S / (1 + S) pointwise, for any query and any parameters.
    #[test]
    fn share_matches_sir(
        x in -140.0..140.0f64,
        y in -140.0..140.0f64,
        alpha in 2.5..12.0f64,
        beta in 1.5..80.0f64,
    ) {
        let field = square_field(beta, alpha);
        let z = Vec2::new(x, y);
        let (i, dist) = field.nearest_emitter(z).unwrap();
        prop_assume!(dist > 1e-6);
        let s = field.sir(i, z);
        let g = field.power_share(i, z);
        prop_assert!((g - s / (1.0 + s)).abs() < 1e-12 * g.max(1.0));
    }

    /// The sample's covered flag agrees with both formulations of the
    /// threshold: SIR >= beta and share >= beta / (1 + beta).
    #[test]
    fn coverage_consistent(
        x in -140.0..140.0f64,
        y in -140.0..140.0f64,
        beta in 1.5..80.0f64,
    ) {
        let field = square_field(beta, 4.0);
        let z = Vec2::new(x, y);
        let sample = field.sample(z);
        let s = field.sir(sample.nearest, z);
        // Skip razor-edge queries where the two predicates could round apart.
        prop_assume!((s / beta - 1.0).abs() > 1e-9);
        let covered = sample.coverage == 1;
        prop_assert_eq!(covered, s >= beta);
        let g = field.power_share(sample.nearest, z);
        prop_assert_eq!(covered, g >= share_threshold(beta));
        // Above threshold beta > 1, reception areas are disjoint.
        prop_assert!(field.coverage_count(z) <= 1);
        prop_assert_eq!(field.coverage_count(z), sample.coverage);
    }

    /// Dropping far interferers can only raise the SIR: widening a pinned
    /// truncation radius decreases it monotonically toward the untruncated
    /// value.
    #[test]
    fn truncation_monotone(
        x in -140.0..140.0f64,
        y in -140.0..140.0f64,
    ) {
        let window = Window::centered_square(300.0).unwrap();
        let set = EmitterSet::lattice(LatticeKind::Square, 25.0, window, Vec2::ZERO).unwrap();
        let params = FieldParams::new(4.0, 10.0).unwrap();
        let z = Vec2::new(x, y);
        let mut last = f64::INFINITY;
        for trunc in [
            Truncation::Radius(60.0),
            Truncation::Radius(120.0),
            Truncation::None,
        ] {
            let field = SirField::new(&set, params.with_truncation(trunc).unwrap()).unwrap();
            let (i, dist) = field.nearest_emitter(z).unwrap();
            prop_assume!(dist > 1e-6);
            let s = field.sir(i, z);
            prop_assert!(s <= last * (1.0 + 1e-12));
            last = s;
        }
    }

    /// Overlay displacement: `with_moved` changes the live position and only
    /// that; restoring the base position restores the field values.
    #[test]
    fn moved_overlay_roundtrip(
        dx in -5.0..5.0f64,
        dy in -5.0..5.0f64,
        x in -60.0..60.0f64,
        y in -60.0..60.0f64,
    ) {
        let field = square_field(10.0, 4.0);
        let (i, _) = field.nearest_emitter(Vec2::ZERO).unwrap();
        let base = field.base_position(i);
        let moved = field.with_moved(i, base + Vec2::new(dx, dy)).unwrap();
        prop_assert_eq!(moved.position(i), base + Vec2::new(dx, dy));
        prop_assert_eq!(moved.base_position(i), base);
        let back = moved.with_moved(i, base).unwrap();
        let z = Vec2::new(x, y);
        let (j, dist) = field.nearest_emitter(z).unwrap();
        prop_assume!(dist > 1e-6);
        prop_assert!((back.sir(j, z) - field.sir(j, z)).abs() <= 1e-12 * field.sir(j, z));
    }
}

/// Midpoint between two equal emitters has SIR exactly 1 by symmetry.
#[test]
fn midpoint_sir_is_unity() {
    let window = Window::centered_square(200.0).unwrap();
    let set = EmitterSet::custom(vec![Vec2::ZERO, Vec2::new(30.0, 0.0)], window).unwrap();
    for alpha in [2.5, 4.0, 8.0, 100.0] {
        let field =
            SirField::new(&set, FieldParams::new(alpha, 10.0).unwrap()).unwrap();
        let s = field.sir(0, Vec2::new(15.0, 0.0));
        assert!((s - 1.0).abs() < 1e-12, "alpha {alpha}: midpoint SIR {s}");
    }
}

/// The documented tail bound at the resolved truncation radius: relative to
/// the nearest-neighbor interference scale, the discarded tail is below the
/// configured epsilon.
#[test]
fn truncation_tail_bound() {
    let window = Window::centered_square(4000.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, 25.0, window, Vec2::ZERO).unwrap();
    let field = SirField::new(&set, FieldParams::new(4.0, 10.0).unwrap()).unwrap();
    let r = field.truncation_radius();
    assert!(r.is_finite() && r > 25.0);
    let nn_scale = 25.0f64.powf(-4.0);
    assert!(field.tail_bound() <= 1e-3 * nn_scale * 1.0001, "tail bound too large");
}
