//! Local-optimality probes: finite differences of the covered-area functional
//! and linear response to global deformations.
//!
//! For a fixed rectangular integration region, let
//!
//! ```text
//! U = sum_i area(A_i intersect region)
//! ```
//!
//! be the total covered area, where `A_i` is emitter `i`'s reception area. At
//! a configuration that locally maximizes coverage, displacing any single
//! emitter must leave `U` stationary (vanishing gradient) with a negative-
//! definite Hessian; and deforming *all* positions by `z -> (I + tA) z` must
//! change a reception area like the Jacobian to first order,
//! `d sigma / dt = sigma * tr(A)`, so every area-preserving deformation is
//! neutral. [`hessian_u`] and [`linear_response`] measure both numerically.
//!
//! Reported derivatives are those of the *normalized* functional
//! `U / sigma_0`, where `sigma_0` is the probed emitter's own reception area
//! at the base configuration. Dividing by `sigma_0` makes the numbers
//! scale-free — a homothety of the whole configuration leaves them unchanged,
//! so values are comparable across spacings and lattice kinds — while signs,
//! the classification, and every identity among the entries are unaffected.
//! The raw covered area is still reported alongside
//! ([`HessianReport::u0`], [`HessianReport::sigma_base`]).
//!
//! # Difference scheme
//!
//! Only emitters near the probe respond appreciably to its displacement: the
//! second derivative of a region's area at distance `R` falls off like
//! `R^-(alpha+2)`, so the ring-sum tail neglected beyond a cutoff `R_c`
//! scales like `R_c^(-alpha)` relative and stays around 1e-2 of `U_xx` at the
//! default cutoff of six spacings (`alpha = 4`). The stencil therefore splits
//! `U` into:
//!
//! - a **near set** — emitters within [`DiffConfig::influence_radius`] of the
//!   probe's base site — re-traced at every stencil evaluation;
//! - a **far total** — every other region intersecting the integration
//!   region — traced once at the base configuration and held fixed, so it
//!   cancels *exactly* in all differences.
//!
//! Near-set membership, per-emitter seed directions, and interferer sets
//! (via [`InterfererSet::EmitterCentered`]) are all frozen at the base
//! configuration, which keeps each stencil evaluation a smooth function of
//! the probe displacement; residual fluctuation in the traced areas sits
//! around 1e-10 relative, far below the central-difference signals.
//!
//! Brute-force integrators over the same region ([`integrate_u_traced`],
//! which re-traces every relevant emitter honestly, and the Monte-Carlo
//! estimate [`integrate_u_mc`]) cross-check the split evaluator.

use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::area_tracer::{InterfererSet, TracerConfig, trace_boundary};
use crate::capacity::McEstimate;
use crate::error::{Error, Result};
use crate::geometry::{
    Mat2, Vec2, Window, clip_polygon_to_window, polygon_bbox, signed_polygon_area,
};
use crate::lattice::EmitterSet;
use crate::sir_field::{FieldParams, SirField, Truncation};

/// Settings for the finite-difference probes ([`gradient_u`], [`hessian_u`]).
#[derive(Clone, Copy, Debug)]
pub struct DiffConfig {
    /// Central-difference half-step along x (meters).
    pub delta_x: f64,
    /// Central-difference half-step along y (meters).
    pub delta_y: f64,
    /// Radius around the probe's base site within which emitters are
    /// re-traced per stencil evaluation. The neglected response tail scales
    /// like `(d / influence_radius)^alpha` relative to the Hessian entries.
    pub influence_radius: f64,
    /// Integration region; `None` sizes a square around the probe that
    /// provably contains every near region under all stencil displacements.
    pub region: Option<Window>,
    /// Tracer settings for all traces. Must use
    /// [`InterfererSet::EmitterCentered`]; the query-centered policy changes
    /// interferer membership between nearby evaluations, which puts
    /// truncation-sized jumps right into the differences.
    pub tracer: TracerConfig,
}

impl DiffConfig {
    /// Defaults for a nearest-neighbor spacing `d`: half-steps of `0.004 d`
    /// (0.1 m at the reference spacing of 25 m), influence radius `6 d`,
    /// auto-sized region, default tracer switched to the emitter-centered
    /// interferer policy.
    pub fn for_spacing(d: f64) -> Self {
        let mut tracer = TracerConfig::for_spacing(d);
        tracer.interferers = InterfererSet::EmitterCentered;
        DiffConfig {
            delta_x: 0.004 * d,
            delta_y: 0.004 * d,
            influence_radius: 6.0 * d,
            region: None,
            tracer,
        }
    }

    fn validated(&self) -> Result<()> {
        if !(self.delta_x > 0.0 && self.delta_x.is_finite())
            || !(self.delta_y > 0.0 && self.delta_y.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "difference half-steps must be positive and finite (got {}, {})",
                self.delta_x, self.delta_y
            )));
        }
        if !(self.influence_radius > 0.0 && self.influence_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "influence radius must be positive and finite (got {})",
                self.influence_radius
            )));
        }
        if self.tracer.interferers != InterfererSet::EmitterCentered {
            return Err(Error::InvalidParameter(
                "difference probes require the emitter-centered interferer policy; \
                 query-centered membership changes between stencil evaluations"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Second-derivative test outcome for a probed emitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// `det H > 0` and `U_xx < 0`: the configuration locally maximizes `U`
    /// with respect to this emitter's position.
    LocalMax,
    /// `det H > 0` and `U_xx > 0`.
    LocalMin,
    /// `det H < 0`.
    Saddle,
    /// `det H = 0`: the test is inconclusive.
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::LocalMax => "local-max",
            Classification::LocalMin => "local-min",
            Classification::Saddle => "saddle",
            Classification::Degenerate => "degenerate",
        })
    }
}

/// Central-difference gradient of `U` for one probed emitter.
#[derive(Clone, Copy, Debug)]
pub struct GradientReport {
    /// Probed emitter index.
    pub probe: usize,
    /// Its base-site position.
    pub base_position: Vec2,
    /// Integration region actually used.
    pub region: Window,
    /// Number of re-traced (near) emitters per stencil evaluation.
    pub near_count: usize,
    /// Number of far regions traced once into the fixed total.
    pub far_count: usize,
    /// The probe's own reception area at the base configuration (m^2), the
    /// normalizer for the derivative entries.
    pub sigma_base: f64,
    /// `d(U/sigma_base)/dx` (per m).
    pub ux: f64,
    /// `d(U/sigma_base)/dy` (per m).
    pub uy: f64,
    /// Half-steps used.
    pub delta: (f64, f64),
}

/// Central-difference Hessian of `U` for one probed emitter.
#[derive(Clone, Copy, Debug)]
pub struct HessianReport {
    /// Probed emitter index.
    pub probe: usize,
    /// Its base-site position.
    pub base_position: Vec2,
    /// Integration region actually used.
    pub region: Window,
    /// Number of re-traced (near) emitters per stencil evaluation.
    pub near_count: usize,
    /// Number of far regions traced once into the fixed total.
    pub far_count: usize,
    /// `U` at the base configuration (m^2), over [`Self::region`].
    pub u0: f64,
    /// The probe's own reception area at the base configuration (m^2), the
    /// normalizer for the derivative entries.
    pub sigma_base: f64,
    /// `d(U/sigma_base)/dx` from the same stencil (per m).
    pub ux: f64,
    /// `d(U/sigma_base)/dy` from the same stencil (per m).
    pub uy: f64,
    /// `d^2(U/sigma_base)/dx^2` (per m^2).
    pub uxx: f64,
    /// `d^2(U/sigma_base)/dxdy` (cross stencil, per m^2).
    pub uxy: f64,
    /// Equal to `uxy` by construction: the symmetric four-point cross stencil
    /// estimates both mixed partials at once.
    pub uyx: f64,
    /// `d^2(U/sigma_base)/dy^2` (per m^2).
    pub uyy: f64,
    /// `uxx * uyy - uxy * uyx`.
    pub det_hessian: f64,
    /// Second-derivative test outcome.
    pub classification: Classification,
    /// Half-steps used.
    pub delta: (f64, f64),
}

/// Upper bound on how far emitter `j`'s reception area can reach, from the
/// Apollonius disk of the pair (j, nearest interferer): `D / (k - 1)` with
/// `k = beta^(1/alpha) > 1`.
fn reach_bound(nearest_dist: f64, k: f64) -> f64 {
    nearest_dist / (k - 1.0)
}

/// Distance from `p` to the rectangle (zero inside).
fn dist_to_window(p: Vec2, w: &Window) -> f64 {
    let dx = (w.min_x() - p.x).max(0.0).max(p.x - w.max_x());
    let dy = (w.min_y() - p.y).max(0.0).max(p.y - w.max_y());
    (dx * dx + dy * dy).sqrt()
}

/// Distance from emitter `j` (effective position) to its nearest interferer.
fn nearest_interferer(field: &SirField, j: usize) -> Result<(usize, f64)> {
    let z = field.position(j);
    let mut radius = 3.0 * field.nn_distance();
    let cap = 8.0
        * (field.window().max_x() - field.window().min_x())
            .max(field.window().max_y() - field.window().min_y());
    loop {
        let candidates = field.neighbors_within(z, radius, Some(j));
        if let Some((best, dist_sq)) = candidates
            .into_iter()
            .map(|c| (c, field.position(c).dist_sq(z)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        {
            return Ok((best, dist_sq.sqrt()));
        }
        if radius > cap {
            return Err(Error::NoInterferers { index: j });
        }
        radius *= 2.0;
    }
}

/// Portion of a traced region's area inside `region`: the line-integral area
/// when the polygon is interior, the clipped shoelace area when it straddles
/// the boundary, zero when disjoint.
fn region_area_within(boundary: &[Vec2], sigma: f64, region: &Window) -> f64 {
    let Some((lo, hi)) = polygon_bbox(boundary) else {
        return 0.0;
    };
    if lo.x >= region.min_x()
        && hi.x <= region.max_x()
        && lo.y >= region.min_y()
        && hi.y <= region.max_y()
    {
        return sigma;
    }
    if hi.x < region.min_x() || lo.x > region.max_x() || hi.y < region.min_y()
        || lo.y > region.max_y()
    {
        return 0.0;
    }
    let clipped = clip_polygon_to_window(boundary, region);
    if clipped.len() < 3 {
        return 0.0;
    }
    signed_polygon_area(&clipped).unwrap_or(0.0)
}

/// Emitters whose reception area can intersect `region`, by the per-emitter
/// Apollonius reach bound.
fn relevant_emitters(field: &SirField, region: &Window) -> Result<Vec<usize>> {
    let k = field.params().beta.powf(1.0 / field.params().alpha);
    if !(k > 1.0) {
        return Err(Error::UnsupportedThreshold {
            beta: field.params().beta,
        });
    }
    let mut out = Vec::new();
    for j in 0..field.len() {
        let gap = dist_to_window(field.position(j), region);
        if gap == 0.0 {
            out.push(j);
            continue;
        }
        let (_, nearest) = nearest_interferer(field, j)?;
        if reach_bound(nearest, k) >= gap {
            out.push(j);
        }
    }
    Ok(out)
}

/// Total covered area inside `region` by honest re-tracing: every emitter
/// whose region can intersect `region` is traced (at the field's effective
/// positions, so displacement overlays are respected) and clipped.
///
/// Requires `beta > 1` so that regions are bounded and disjoint.
pub fn integrate_u_traced(field: &SirField, region: &Window, tracer: &TracerConfig) -> Result<f64> {
    let mut total = 0.0;
    for j in relevant_emitters(field, region)? {
        let area = trace_boundary(field, j, tracer)?;
        total += region_area_within(&area.boundary, area.sigma, region);
    }
    Ok(total)
}

/// Monte-Carlo estimate of the covered area inside `region`: uniform samples
/// scored by [`SirField::coverage_count`], scaled by the region's area. For
/// `beta > 1` the count is the 0/1 coverage indicator, so this estimates the
/// same functional as [`integrate_u_traced`].
pub fn integrate_u_mc(
    field: &SirField,
    region: &Window,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "monte-carlo integration needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wx, wy) = (
        region.max_x() - region.min_x(),
        region.max_y() - region.min_y(),
    );
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let z = Vec2::new(
            region.min_x() + wx * rng.random::<f64>(),
            region.min_y() + wy * rng.random::<f64>(),
        );
        let h = field.coverage_count(z) as f64;
        sum += h;
        sum_sq += h * h;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) / (n - 1.0).max(1.0);
    let area = region.area();
    Ok(McEstimate {
        value: area * mean,
        ci_halfwidth: area * 1.96 * var.sqrt(),
        samples,
    })
}

/// One member of the frozen near set.
struct NearEmitter {
    index: usize,
    seed_direction: Vec2,
}

/// Split evaluator of `U(offset)` for stencils around one probe: near set
/// re-traced per call, far total fixed. See the module docs for why every
/// ingredient is frozen at the base configuration.
struct UIntegrator<'f> {
    field: &'f SirField,
    probe: usize,
    base: Vec2,
    region: Window,
    near: Vec<NearEmitter>,
    far_total: f64,
    far_count: usize,
    sigma_base: f64,
    tracer: TracerConfig,
}

impl<'f> UIntegrator<'f> {
    fn new(field: &'f SirField, probe: usize, cfg: &DiffConfig) -> Result<Self> {
        cfg.validated()?;
        if let Some((i, _)) = field.overlay() {
            return Err(Error::InvalidParameter(format!(
                "difference probes need the unperturbed field, but emitter {i} \
                 carries a displacement overlay"
            )));
        }
        if probe >= field.len() {
            return Err(Error::InvalidParameter(format!(
                "probe index {probe} out of range ({} emitters)",
                field.len()
            )));
        }
        let params = field.params();
        let k = params.beta.powf(1.0 / params.alpha);
        if !(k > 1.0) {
            return Err(Error::UnsupportedThreshold { beta: params.beta });
        }
        let base = field.base_position(probe);
        let delta_max = cfg.delta_x.max(cfg.delta_y);

        // Near membership and seed directions, all from base positions.
        let near_idx = field.neighbors_within(base, cfg.influence_radius, None);
        debug_assert!(near_idx.binary_search(&probe).is_ok());
        let mut near = Vec::with_capacity(near_idx.len());
        let mut max_reach = 0.0f64;
        for j in near_idx {
            let (nearest, dist) = nearest_interferer(field, j)?;
            let dir = (field.base_position(nearest) - field.base_position(j))
                .normalized()
                .ok_or(Error::DuplicateEmitters {
                    first: j,
                    second: nearest,
                })?;
            max_reach = max_reach.max(base.dist(field.base_position(j)) + reach_bound(dist, k));
            near.push(NearEmitter {
                index: j,
                seed_direction: dir,
            });
        }

        let region = match cfg.region {
            Some(r) => r,
            // Auto region: contains every near region under any stencil
            // displacement, with one spacing of slack.
            Option::None => Window::new(
                base,
                max_reach + delta_max + field.nn_distance(),
                max_reach + delta_max + field.nn_distance(),
            )?,
        };
        if !region.contains(base) {
            return Err(Error::InvalidParameter(
                "integration region does not contain the probed emitter".into(),
            ));
        }

        // Far regions: traced once, clipped to the region, held fixed.
        let near_set: HashSet<usize> = near.iter().map(|n| n.index).collect();
        let mut far_total = 0.0;
        let mut far_count = 0;
        for j in relevant_emitters(field, &region)? {
            if near_set.contains(&j) {
                continue;
            }
            let area = trace_boundary(field, j, &cfg.tracer)?;
            far_total += region_area_within(&area.boundary, area.sigma, &region);
            far_count += 1;
        }

        // The probe's own base-configuration area, the derivative normalizer.
        let sigma_base = {
            let probe_near = near
                .iter()
                .find(|n| n.index == probe)
                .expect("probe is inside its own influence disk");
            let mut tracer = cfg.tracer;
            tracer.seed_direction = Some(probe_near.seed_direction);
            trace_boundary(field, probe, &tracer)?.sigma
        };

        Ok(UIntegrator {
            field,
            probe,
            base,
            region,
            near,
            far_total,
            far_count,
            sigma_base,
            tracer: cfg.tracer,
        })
    }

    /// `U` with the probe displaced by `offset` from its base site.
    fn u(&self, offset: Vec2) -> Result<f64> {
        let moved = self.field.with_moved(self.probe, self.base + offset)?;
        let mut total = self.far_total;
        for ne in &self.near {
            let mut cfg = self.tracer;
            cfg.seed_direction = Some(ne.seed_direction);
            let area = trace_boundary(&moved, ne.index, &cfg)?;
            let (lo, hi) = polygon_bbox(&area.boundary).expect("traced polygon is non-empty");
            if lo.x < self.region.min_x()
                || hi.x > self.region.max_x()
                || lo.y < self.region.min_y()
                || hi.y > self.region.max_y()
            {
                return Err(Error::InvalidParameter(format!(
                    "integration region too small: the reception area of near emitter {} \
                     reaches its boundary; enlarge the region or shrink influence_radius",
                    ne.index
                )));
            }
            total += area.sigma;
        }
        Ok(total)
    }
}

/// Central-difference gradient of `U` under displacement of emitter `probe`.
pub fn gradient_u(field: &SirField, probe: usize, cfg: &DiffConfig) -> Result<GradientReport> {
    let integ = UIntegrator::new(field, probe, cfg)?;
    let (dx, dy) = (cfg.delta_x, cfg.delta_y);
    let uxp = integ.u(Vec2::new(dx, 0.0))?;
    let uxm = integ.u(Vec2::new(-dx, 0.0))?;
    let uyp = integ.u(Vec2::new(0.0, dy))?;
    let uym = integ.u(Vec2::new(0.0, -dy))?;
    let s0 = integ.sigma_base;
    Ok(GradientReport {
        probe,
        base_position: integ.base,
        region: integ.region,
        near_count: integ.near.len(),
        far_count: integ.far_count,
        sigma_base: s0,
        ux: (uxp - uxm) / (2.0 * dx * s0),
        uy: (uyp - uym) / (2.0 * dy * s0),
        delta: (dx, dy),
    })
}

/// Central-difference Hessian (nine-point stencil) of `U` under displacement
/// of emitter `probe`, with the second-derivative classification.
pub fn hessian_u(field: &SirField, probe: usize, cfg: &DiffConfig) -> Result<HessianReport> {
    let integ = UIntegrator::new(field, probe, cfg)?;
    let (dx, dy) = (cfg.delta_x, cfg.delta_y);
    let u0 = integ.u(Vec2::ZERO)?;
    let uxp = integ.u(Vec2::new(dx, 0.0))?;
    let uxm = integ.u(Vec2::new(-dx, 0.0))?;
    let uyp = integ.u(Vec2::new(0.0, dy))?;
    let uym = integ.u(Vec2::new(0.0, -dy))?;
    let upp = integ.u(Vec2::new(dx, dy))?;
    let upm = integ.u(Vec2::new(dx, -dy))?;
    let ump = integ.u(Vec2::new(-dx, dy))?;
    let umm = integ.u(Vec2::new(-dx, -dy))?;

    let s0 = integ.sigma_base;
    let ux = (uxp - uxm) / (2.0 * dx * s0);
    let uy = (uyp - uym) / (2.0 * dy * s0);
    let uxx = (uxp - 2.0 * u0 + uxm) / (dx * dx * s0);
    let uyy = (uyp - 2.0 * u0 + uym) / (dy * dy * s0);
    let uxy = (upp - upm - ump + umm) / (4.0 * dx * dy * s0);
    let uyx = uxy;
    let det_hessian = uxx * uyy - uxy * uyx;
    let classification = if det_hessian > 0.0 && uxx < 0.0 {
        Classification::LocalMax
    } else if det_hessian > 0.0 && uxx > 0.0 {
        Classification::LocalMin
    } else if det_hessian < 0.0 {
        Classification::Saddle
    } else {
        Classification::Degenerate
    };

    Ok(HessianReport {
        probe,
        base_position: integ.base,
        region: integ.region,
        near_count: integ.near.len(),
        far_count: integ.far_count,
        u0,
        sigma_base: s0,
        ux,
        uy,
        uxx,
        uxy,
        uyx,
        uyy,
        det_hessian,
        classification,
        delta: (dx, dy),
    })
}

/// Linear response of one reception area to a global deformation
/// `z -> (I + tA) z` of every emitter position.
#[derive(Clone, Copy, Debug)]
pub struct LinearResponseReport {
    /// Deformation generator `A`.
    pub matrix: Mat2,
    /// Half-step `t` of the central difference.
    pub t: f64,
    /// Traced emitter index.
    pub emitter: usize,
    /// Reception area at the undeformed configuration (m^2).
    pub sigma_base: f64,
    /// Reception area under `I + tA`.
    pub sigma_plus: f64,
    /// Reception area under `I - tA`.
    pub sigma_minus: f64,
    /// `(sigma_plus - sigma_minus) / (2 t)`.
    pub derivative: f64,
    /// First-order Jacobian prediction `sigma_base * tr(A)`.
    pub predicted: f64,
    /// `derivative - predicted`.
    pub deviation: f64,
}

/// Response matrix `D` of one reception area to the four elementary
/// deformation generators.
#[derive(Clone, Copy, Debug)]
pub struct ResponseMatrixReport {
    /// Traced emitter index.
    pub emitter: usize,
    /// Reception area at the undeformed configuration (m^2).
    pub sigma_base: f64,
    /// `D[a][b] = d sigma / dt` under `A = E_ab` (the single-entry matrix).
    /// At a Jacobian-dominated (locally optimal) configuration,
    /// `D = sigma_base * I` and `tr(D) = 2 sigma_base`.
    pub response: Mat2,
    /// Half-step `t` used for every entry.
    pub t: f64,
}

/// Deformed copy of the set's positions with a window that exactly bounds the
/// affine image of the original window.
fn deformed_set(set: &EmitterSet, m: Mat2) -> Result<EmitterSet> {
    let positions: Vec<Vec2> = set.positions().iter().map(|&p| m.apply(p)).collect();
    let w = set.window();
    let center = m.apply(w.center);
    let (hw, hh) = (w.half_width, w.half_height);
    let half_w = m.xx.abs() * hw + m.xy.abs() * hh;
    let half_h = m.yx.abs() * hw + m.yy.abs() * hh;
    EmitterSet::custom(positions, Window::new(center, half_w, half_h)?)
}

fn trace_sigma(
    field: &SirField,
    emitter: usize,
    tracer: &TracerConfig,
    seed_direction: Vec2,
) -> Result<f64> {
    let mut cfg = *tracer;
    cfg.seed_direction = Some(seed_direction);
    Ok(trace_boundary(field, emitter, &cfg)?.sigma)
}

/// Shared base computation for the deformation probes: base field with the
/// truncation radius resolved once and pinned, base seed direction, and the
/// base reception area.
struct DeformationBase {
    params_fixed: FieldParams,
    seed_direction: Vec2,
    sigma_base: f64,
}

impl DeformationBase {
    fn new(
        set: &EmitterSet,
        params: FieldParams,
        emitter: usize,
        tracer: &TracerConfig,
    ) -> Result<Self> {
        let field = SirField::new(set, params)?;
        if emitter >= field.len() {
            return Err(Error::InvalidParameter(format!(
                "emitter index {emitter} out of range ({} emitters)",
                field.len()
            )));
        }
        // Pin the resolved truncation radius so the deformed fields sum over
        // rims at the same absolute distance; membership changes at the rim
        // under a deformation of order t are then tail-sized.
        let r_t = field.truncation_radius();
        let mut params_fixed = params;
        if r_t.is_finite() {
            params_fixed.truncation = Truncation::Radius(r_t);
        }
        let (nearest, _) = nearest_interferer(&field, emitter)?;
        let seed_direction = (field.position(nearest) - field.position(emitter))
            .normalized()
            .ok_or(Error::DuplicateEmitters {
                first: emitter,
                second: nearest,
            })?;
        let sigma_base = trace_sigma(&field, emitter, tracer, seed_direction)?;
        Ok(DeformationBase {
            params_fixed,
            seed_direction,
            sigma_base,
        })
    }

    /// Reception area of the emitter under `z -> (I + s A) z`.
    fn sigma_deformed(
        &self,
        set: &EmitterSet,
        emitter: usize,
        tracer: &TracerConfig,
        a: Mat2,
        s: f64,
    ) -> Result<f64> {
        let m = Mat2::new(
            1.0 + s * a.xx,
            s * a.xy,
            s * a.yx,
            1.0 + s * a.yy,
        );
        let deformed = deformed_set(set, m)?;
        let field = SirField::new(&deformed, self.params_fixed)?;
        // Deform the seed ray with the configuration so the probe is
        // equivariant (a rigid rotation rotates the trace wholesale).
        let dir = m
            .apply(self.seed_direction)
            .normalized()
            .expect("deformation near identity cannot collapse a direction");
        trace_sigma(&field, emitter, tracer, dir)
    }
}

fn validated_deformation_step(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite() && t <= 0.1) {
        return Err(Error::InvalidParameter(format!(
            "deformation half-step must lie in (0, 0.1] (got {t})"
        )));
    }
    Ok(())
}

/// Central-difference response of emitter `emitter`'s reception area to the
/// global deformation family `z -> (I + tA) z`, compared against the
/// first-order Jacobian prediction `sigma * tr(A)`.
///
/// The deformed configurations are rebuilt as custom sets (order preserved,
/// so the emitter keeps its index) over exactly transformed windows, with the
/// truncation radius pinned to the base field's resolved value.
pub fn linear_response(
    set: &EmitterSet,
    params: FieldParams,
    emitter: usize,
    a: Mat2,
    t: f64,
    tracer: &TracerConfig,
) -> Result<LinearResponseReport> {
    validated_deformation_step(t)?;
    let base = DeformationBase::new(set, params, emitter, tracer)?;
    let sigma_plus = base.sigma_deformed(set, emitter, tracer, a, t)?;
    let sigma_minus = base.sigma_deformed(set, emitter, tracer, a, -t)?;
    let derivative = (sigma_plus - sigma_minus) / (2.0 * t);
    let predicted = base.sigma_base * a.trace();
    Ok(LinearResponseReport {
        matrix: a,
        t,
        emitter,
        sigma_base: base.sigma_base,
        sigma_plus,
        sigma_minus,
        derivative,
        predicted,
        deviation: derivative - predicted,
    })
}

/// The full response matrix: [`linear_response`] for each elementary
/// generator `E_ab`, sharing one base computation (nine traces in total).
pub fn estimate_response_matrix(
    set: &EmitterSet,
    params: FieldParams,
    emitter: usize,
    t: f64,
    tracer: &TracerConfig,
) -> Result<ResponseMatrixReport> {
    validated_deformation_step(t)?;
    let base = DeformationBase::new(set, params, emitter, tracer)?;
    let generators = [
        Mat2::new(1.0, 0.0, 0.0, 0.0),
        Mat2::new(0.0, 1.0, 0.0, 0.0),
        Mat2::new(0.0, 0.0, 1.0, 0.0),
        Mat2::new(0.0, 0.0, 0.0, 1.0),
    ];
    let mut entries = [0.0f64; 4];
    for (slot, a) in entries.iter_mut().zip(generators) {
        let plus = base.sigma_deformed(set, emitter, tracer, a, t)?;
        let minus = base.sigma_deformed(set, emitter, tracer, a, -t)?;
        *slot = (plus - minus) / (2.0 * t);
    }
    Ok(ResponseMatrixReport {
        emitter,
        sigma_base: base.sigma_base,
        response: Mat2::new(entries[0], entries[1], entries[2], entries[3]),
        t,
    })
}
