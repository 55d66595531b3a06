//! Invariants of the displacement-derivative machinery: stencil convergence,
//! lattice symmetry, rotation invariance of the classification, first-order
//! structure of the deformation response, and agreement of the two U
//! integrators.

use gridcap::optimality::{
    Classification, DiffConfig, gradient_u, hessian_u, integrate_u_mc, integrate_u_traced,
    linear_response,
};
use gridcap::{
    EmitterSet, FieldParams, LatticeKind, Mat2, SirField, TracerConfig, Vec2, Window,
};

fn lattice_field(kind: LatticeKind, side: f64) -> SirField {
    let window = Window::centered_square(side).unwrap();
    let set = EmitterSet::lattice(kind, 25.0, window, Vec2::ZERO).unwrap();
    SirField::new(&set, FieldParams::new(4.0, 10.0).unwrap()).unwrap()
}

fn quick_diff() -> DiffConfig {
    let mut cfg = DiffConfig::for_spacing(25.0);
    cfg.influence_radius = 75.0;
    cfg
}

/// Central-stencil consistency: halving the step changes Uxx by less than
/// the previous halving did (second-order convergence until the tracer's
/// noise floor).
#[test]
fn stencil_halving_contracts() {
    let field = lattice_field(LatticeKind::Square, 400.0);
    let probe = field.nearest_emitter(Vec2::ZERO).unwrap().0;
    let mut vals = Vec::new();
    for delta in [1.0, 0.5, 0.25] {
        let mut cfg = quick_diff();
        cfg.delta_x = delta;
        cfg.delta_y = delta;
        let rep = hessian_u(&field, probe, &cfg).unwrap();
        vals.push(rep.uxx);
    }
    let change_coarse = (vals[1] - vals[0]).abs();
    let change_fine = (vals[2] - vals[1]).abs();
    assert!(
        change_fine < change_coarse,
        "halving did not contract: {change_coarse:.3e} then {change_fine:.3e} ({vals:?})"
    );
}

/// Square-lattice symmetry of the Hessian: equal diagonal curvature within
/// 1%, off-diagonal at stencil-noise level.
#[test]
fn square_hessian_symmetry() {
    let field = lattice_field(LatticeKind::Square, 400.0);
    let probe = field.nearest_emitter(Vec2::ZERO).unwrap().0;
    let rep = hessian_u(&field, probe, &quick_diff()).unwrap();
    assert!(
        (rep.uxx - rep.uyy).abs() < 0.01 * rep.uxx.abs(),
        "Uxx {:.6e} vs Uyy {:.6e}",
        rep.uxx,
        rep.uyy
    );
    assert!(rep.uxy.abs() < 1e-3 * rep.uxx.abs(), "Uxy {:.3e}", rep.uxy);
    assert!((rep.uxy - rep.uyx).abs() <= 1e-12 * rep.uxx.abs(), "mixed partials differ");
    assert_eq!(rep.classification, Classification::LocalMax);
}

/// Rotating the whole configuration by the lattice's symmetry angle leaves
/// the classification and the rotation-invariant curvature combinations
/// unchanged (the probe sits at the origin, the rotation's fixed point).
#[test]
fn classification_rotation_invariant() {
    for (kind, angle) in [
        (LatticeKind::Square, std::f64::consts::FRAC_PI_2),
        (LatticeKind::Hexagonal, 2.0 * std::f64::consts::FRAC_PI_3),
        (LatticeKind::Triangular, std::f64::consts::FRAC_PI_3),
    ] {
        // Carve a rotation-invariant disk out of the lattice so the emitter
        // membership itself is identical before and after rotation.
        let window = Window::centered_square(500.0).unwrap();
        let full = EmitterSet::lattice(kind, 25.0, window, Vec2::ZERO).unwrap();
        let disk: Vec<Vec2> = full
            .positions()
            .iter()
            .copied()
            .filter(|p| p.norm() <= 200.0)
            .collect();
        let (sin, cos) = angle.sin_cos();
        let rotated: Vec<Vec2> = disk
            .iter()
            .map(|p| Vec2::new(cos * p.x - sin * p.y, sin * p.x + cos * p.y))
            .collect();

        let params = FieldParams::new(4.0, 10.0).unwrap();
        let mut reports = Vec::new();
        for positions in [disk, rotated] {
            let set = EmitterSet::custom(positions, window).unwrap();
            let field = SirField::new(&set, params).unwrap();
            let probe = field.nearest_emitter(Vec2::ZERO).unwrap().0;
            assert!(field.position(probe).norm() < 1e-9, "probe not at the fixed point");
            reports.push(hessian_u(&field, probe, &quick_diff()).unwrap());
        }
        let (a, b) = (&reports[0], &reports[1]);
        assert_eq!(a.classification, b.classification, "{kind}: classification changed");
        let (tr_a, tr_b) = (a.uxx + a.uyy, b.uxx + b.uyy);
        assert!(
            (tr_a - tr_b).abs() < 1e-3 * tr_a.abs(),
            "{kind}: Laplacian not rotation-invariant: {tr_a:.6e} vs {tr_b:.6e}"
        );
        assert!(
            (a.det_hessian - b.det_hessian).abs() < 5e-3 * a.det_hessian.abs(),
            "{kind}: detH not rotation-invariant"
        );
    }
}

/// The displacement gradient is restoring: pull one emitter off its site
/// (statically, in the base configuration) and the gradient points back.
#[test]
fn gradient_is_restoring() {
    let window = Window::centered_square(400.0).unwrap();
    let lattice = EmitterSet::lattice(LatticeKind::Square, 25.0, window, Vec2::ZERO).unwrap();
    let mut positions = lattice.positions().to_vec();
    let probe = lattice.center_index().unwrap();
    positions[probe] = positions[probe] + Vec2::new(2.0, 0.0);
    let set = EmitterSet::custom(positions, window).unwrap();
    let field = SirField::new(&set, FieldParams::new(4.0, 10.0).unwrap()).unwrap();

    let rep = gradient_u(&field, probe, &quick_diff()).unwrap();
    assert!(rep.ux < 0.0, "gradient should oppose the +x displacement, got {:.3e}", rep.ux);
    assert!(rep.uy.abs() < 0.05 * rep.ux.abs(), "transverse component should stay small");
}

/// linear_response with A and -A returns exactly opposite derivatives (the
/// central difference is antisymmetric in the generator by construction).
#[test]
fn deformation_antisymmetry() {
    let d = 25.0;
    let window = Window::centered_square(600.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO).unwrap();
    let params = FieldParams::new(4.0, 10.0).unwrap();
    let field = SirField::new(&set, params).unwrap();
    let center = field.nearest_emitter(Vec2::ZERO).unwrap().0;
    let tracer = TracerConfig::for_spacing(d);
    for a in [Mat2::IDENTITY, Mat2::SHEAR] {
        let plus = linear_response(&set, params, center, a, 1e-4, &tracer).unwrap();
        let neg = Mat2::new(-a.xx, -a.xy, -a.yx, -a.yy);
        let minus = linear_response(&set, params, center, neg, 1e-4, &tracer).unwrap();
        assert!(
            (plus.derivative + minus.derivative).abs()
                <= 1e-12 * plus.derivative.abs().max(1e-6),
            "derivatives not antisymmetric: {} vs {}",
            plus.derivative,
            minus.derivative
        );
    }
}

/// Deformation half-steps outside (0, 0.1] are rejected.
#[test]
fn deformation_step_domain() {
    let d = 25.0;
    let window = Window::centered_square(300.0).unwrap();
    let set = EmitterSet::lattice(LatticeKind::Square, d, window, Vec2::ZERO).unwrap();
    let params = FieldParams::new(4.0, 10.0).unwrap();
    let field = SirField::new(&set, params).unwrap();
    let center = field.nearest_emitter(Vec2::ZERO).unwrap().0;
    let tracer = TracerConfig::for_spacing(d);
    for bad_t in [0.0, -1e-4, 0.2, f64::NAN] {
        assert!(
            linear_response(&set, params, center, Mat2::IDENTITY, bad_t, &tracer).is_err(),
            "t = {bad_t} should be rejected"
        );
    }
}

/// The traced and Monte-Carlo U integrators estimate the same functional.
#[test]
fn u_integrators_agree() {
    let field = lattice_field(LatticeKind::Square, 400.0);
    let region = Window::new(Vec2::ZERO, 60.0, 60.0).unwrap();
    let traced = integrate_u_traced(&field, &region, &TracerConfig::for_spacing(25.0)).unwrap();
    let mc = integrate_u_mc(&field, &region, 200_000, 21).unwrap();
    assert!(
        (traced - mc.value).abs() < 4.0 * mc.ci_halfwidth,
        "traced {traced:.4} vs mc {} +- {}",
        mc.value,
        mc.ci_halfwidth
    );
    // The region is 120 x 120 m^2 around the central emitter: covered area
    // must be positive and below the region area.
    assert!(traced > 0.0 && traced < 120.0 * 120.0);
}
