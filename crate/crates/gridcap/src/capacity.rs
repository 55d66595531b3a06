//! Local capacity: emitter density times mean reception area.
//!
//! `c = lambda * sigma` is the expected number of emitters a uniformly random
//! location can decode. For `beta > 1` reception areas are disjoint, so
//! `c <= 1` and equals the fraction of the plane under coverage. Two families
//! of transmission schemes are compared at equal density:
//!
//! - **Grids**: all emitters of a regular lattice transmit in every slot.
//!   `sigma` comes from tracing the central reception area; by periodicity
//!   every (deep-interior) emitter has the same area, so `c = lambda * sigma`.
//! - **Slotted ALOHA**: an infinite random (Poisson) population in which each
//!   slot activates an independent thinning. The mean reception area of the
//!   typical emitter has the closed form
//!   `sigma = (1/lambda) * sinc(2 pi / alpha) * beta^(-2/alpha)` (with
//!   `sinc x = sin(x)/x`), making `c` independent of density.
//!
//! Both closed forms are cross-checked here by direct Monte-Carlo estimators
//! built on nothing but the SIR definition.

use std::fmt;
use std::io::Write as IoWrite;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::area_tracer::{TracerConfig, trace_boundary};
use crate::error::{Error, Result};
use crate::geometry::{Vec2, Window};
use crate::lattice::{EmitterSet, LatticeKind};
use crate::sir_field::{
    DEFAULT_TAIL_EPSILON, FieldParams, SirField, accumulate, share_threshold,
};

/// A transmission scheme whose local capacity can be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Grid(LatticeKind),
    Aloha,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Grid(k) => k.fmt(f),
            Scheme::Aloha => f.write_str("aloha"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "sq" => Ok(Scheme::Grid(LatticeKind::Square)),
            "hexagonal" | "hex" | "honeycomb" => Ok(Scheme::Grid(LatticeKind::Hexagonal)),
            "triangular" | "tri" => Ok(Scheme::Grid(LatticeKind::Triangular)),
            "aloha" => Ok(Scheme::Aloha),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected square, hexagonal, triangular, or aloha)"
            ))),
        }
    }
}

/// One (scheme, alpha, beta) capacity evaluation.
#[derive(Clone, Copy, Debug)]
pub struct CapacityResult {
    pub scheme: Scheme,
    pub alpha: f64,
    pub beta: f64,
    /// Emitter density (per m^2).
    pub lambda: f64,
    /// Mean reception area per emitter (m^2).
    pub sigma: f64,
    /// Local capacity `lambda * sigma` (dimensionless).
    pub capacity: f64,
}

impl CapacityResult {
    fn new(scheme: Scheme, alpha: f64, beta: f64, lambda: f64, sigma: f64) -> Result<Self> {
        let capacity = lambda * sigma;
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "capacity evaluated to {capacity}"
            )));
        }
        // Disjointness of reception areas bounds coverage by 1; allow a hair
        // of numerical slack from the traced boundary.
        if beta > 1.0 && capacity > 1.0 + 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "capacity {capacity} exceeds 1 despite beta = {beta} > 1; \
                 the evaluation is inconsistent"
            )));
        }
        Ok(CapacityResult {
            scheme,
            alpha,
            beta,
            lambda,
            sigma,
            capacity,
        })
    }
}

/// Closed-form mean reception area of slotted ALOHA at density `lambda`.
pub fn aloha_sigma(lambda: f64, beta: f64, alpha: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "density must be positive and finite (got {lambda})"
        )));
    }
    Ok(aloha_capacity(beta, alpha)?.capacity / lambda)
}

/// Closed-form slotted-ALOHA local capacity (density-independent):
/// `c = sinc(2 pi / alpha) * beta^(-2/alpha)`.
pub fn aloha_capacity(beta: f64, alpha: f64) -> Result<CapacityResult> {
    FieldParams::new(alpha, beta)?;
    let x = 2.0 * std::f64::consts::PI / alpha;
    let c = (x.sin() / x) * beta.powf(-2.0 / alpha);
    // Report against a reference density of 1; sigma then equals c.
    CapacityResult::new(Scheme::Aloha, alpha, beta, 1.0, c)
}

/// Grid local capacity by tracing the central emitter's reception area on a
/// window sized to contain the full interference truncation disk.
pub fn grid_capacity(kind: LatticeKind, d: f64, alpha: f64, beta: f64) -> Result<CapacityResult> {
    grid_capacity_with(kind, d, alpha, beta, &TracerConfig::for_spacing(d))
}

/// [`grid_capacity`] with explicit tracer settings.
pub fn grid_capacity_with(
    kind: LatticeKind,
    d: f64,
    alpha: f64,
    beta: f64,
    tracer: &TracerConfig,
) -> Result<CapacityResult> {
    let field = grid_field(kind, d, alpha, beta)?;
    let center = nearest_index(&field, Vec2::ZERO);
    let area = trace_boundary(&field, center, tracer)?;
    let lambda = kind.density(d);
    CapacityResult::new(Scheme::Grid(kind), alpha, beta, lambda, area.sigma)
}

/// Lattice field on a window that fully contains the truncation disk of the
/// central emitter (so the traced area does not see the window edge).
pub fn grid_field(kind: LatticeKind, d: f64, alpha: f64, beta: f64) -> Result<SirField> {
    let params = FieldParams::new(alpha, beta)?;
    let r = untruncated_radius(alpha, kind.density(d), d);
    let side = 2.0 * (r + 4.0 * d);
    let set = EmitterSet::lattice(kind, d, Window::centered_square(side)?, Vec2::ZERO)?;
    SirField::new(&set, params)
}

/// The [`crate::sir_field::Truncation::RelativeTail`] radius before window
/// capping — what a window must accommodate to avoid edge effects.
fn untruncated_radius(alpha: f64, lambda: f64, nn: f64) -> f64 {
    let num = 2.0 * std::f64::consts::PI * lambda * nn.powf(alpha);
    let r = (num / ((alpha - 2.0) * DEFAULT_TAIL_EPSILON)).powf(1.0 / (alpha - 2.0));
    r.max(2.0 * nn)
}

/// A Monte-Carlo estimate with a 95% confidence halfwidth.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub value: f64,
    pub ci_halfwidth: f64,
    /// Number of independent trials (or samples) behind the estimate.
    pub samples: u64,
}

/// Monte-Carlo oracle for the slotted-ALOHA mean reception area.
///
/// Works directly from the SIR definition, independent of the field/tracer
/// machinery: per trial, a fresh Poisson interferer population is drawn on a
/// disk large enough to hold every relevant interferer, and the typical
/// emitter's reception area is integrated as
/// `sigma = pi * integral of 1[decodable at distance sqrt(s)] ds`
/// along one random ray (unbiased by isotropy in expectation).
pub fn mc_aloha_sigma(
    lambda: f64,
    beta: f64,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    FieldParams::new(alpha, beta)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "density must be positive and finite (got {lambda})"
        )));
    }
    if trials < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 trials for a variance estimate".into(),
        ));
    }

    // Decoding at distance r requires a clearance disk of radius
    // r * beta^(1/alpha) around the receiver, so the survival probability
    // falls at least like exp(-lambda pi k^2 s) in s = r^2. 30 e-folds out,
    // the truncated mass is negligible.
    let k_sq = beta.powf(2.0 / alpha);
    let s_max = 30.0 / (lambda * std::f64::consts::PI * k_sq);
    let r_max = s_max.sqrt();
    // Interferers farther than r_tail from a receiver contribute less than
    // epsilon of a mean nearest-neighbor term (same criterion as the field).
    let nn = 0.5 / lambda.sqrt();
    let r_tail = untruncated_radius(alpha, lambda, nn);
    let r_dom = r_max + r_tail;
    let mean_count = lambda * std::f64::consts::PI * r_dom * r_dom;
    let poisson = Poisson::new(mean_count)
        .map_err(|e| Error::InvalidParameter(format!("Poisson({mean_count}): {e}")))?;

    const NODES: usize = 256;
    let ds = s_max / (NODES - 1) as f64;
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        rng.set_stream(trial);
        let n = poisson.sample(&mut rng) as usize;
        xs.clear();
        ys.clear();
        for _ in 0..n {
            // Uniform point in the disk of radius r_dom.
            let r = r_dom * rng.random::<f64>().sqrt();
            let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            xs.push(r * phi.cos());
            ys.push(r * phi.sin());
        }
        let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let (dir_x, dir_y) = (theta.cos(), theta.sin());

        // Trapezoid over s in [0, s_max]; the s = 0 node is always decodable.
        let mut integral = 0.5 * ds;
        for j in 1..NODES {
            let s = ds * j as f64;
            let r = s.sqrt();
            let (zx, zy) = (r * dir_x, r * dir_y);
            let own = pathloss(r * r, alpha);
            let mut interference = 0.0;
            for (x, y) in xs.iter().zip(ys.iter()) {
                let dx = zx - x;
                let dy = zy - y;
                interference += pathloss(dx * dx + dy * dy, alpha);
            }
            if own >= beta * interference {
                integral += if j == NODES - 1 { 0.5 * ds } else { ds };
            }
        }
        let sigma_t = std::f64::consts::PI * integral;
        sum += sigma_t;
        sum_sq += sigma_t * sigma_t;
    }

    let t = trials as f64;
    let mean = sum / t;
    let var = ((sum_sq / t) - mean * mean).max(0.0) * t / (t - 1.0);
    Ok(McEstimate {
        value: mean,
        ci_halfwidth: 1.96 * (var / t).sqrt(),
        samples: trials,
    })
}

/// Independent path-loss kernel for the Monte-Carlo oracles (the common
/// quartic exponent avoids `powf`, everything else takes the general route).
fn pathloss(r_sq: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        let inv = 1.0 / r_sq;
        inv * inv
    } else {
        r_sq.powf(-alpha / 2.0)
    }
}

/// Monte-Carlo estimate of grid local capacity as a *coverage fraction*:
/// uniform samples over one lattice fundamental cell, counting decodable
/// emitters. For `beta > 1` the sample mean estimates `c = lambda sigma`
/// without any boundary tracing — the cross-check for [`grid_capacity`].
pub fn mc_grid_coverage(
    kind: LatticeKind,
    d: f64,
    alpha: f64,
    beta: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 samples for a variance estimate".into(),
        ));
    }
    let field = grid_field(kind, d, alpha, beta)?;
    let r_t = field.truncation_radius();
    let (cell_w, cell_h) = kind.fundamental_cell(d);
    let cell_diag = 0.5 * (cell_w * cell_w + cell_h * cell_h).sqrt();

    // Superset of every sample's in-radius emitters (samples stay within the
    // cell around the origin emitter); coordinates in index-sorted order.
    let superset = field.neighbors_within(Vec2::ZERO, r_t + cell_diag, None);
    let (xs, ys) = field.gather(&superset);

    // Only emitters this close to a sample can clear the share threshold
    // (their path gain must be at least the threshold times the nearest
    // emitter's, and the nearest is within the cell covering radius).
    let near_radius = d * share_threshold(beta).powf(-1.0 / alpha) + cell_diag;
    let near = field.neighbors_within(Vec2::ZERO, near_radius, None);
    let near_pos: Vec<Vec2> = near.iter().map(|&j| field.position(j)).collect();

    let rt_sq = field.rt_sq();
    let pl = field.path_loss();
    let threshold = share_threshold(beta);

    const CHUNK: u64 = 4096;
    let mut covered: u64 = 0;
    let mut count_sq: f64 = 0.0; // sum of h^2 for the variance (h can exceed 1 when beta <= 1)
    let mut sum_h: f64 = 0.0;
    let mut remaining = samples;
    let mut chunk_id = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while remaining > 0 {
        let batch = remaining.min(CHUNK);
        rng.set_stream(chunk_id);
        for _ in 0..batch {
            let zx = (rng.random::<f64>() - 0.5) * cell_w;
            let zy = (rng.random::<f64>() - 0.5) * cell_h;
            let z = Vec2::new(zx, zy);
            let total = accumulate(&xs, &ys, z, rt_sq, pl);
            let mut h = 0u32;
            if total.is_finite() {
                let cut = threshold * total;
                for p in &near_pos {
                    if pl.eval(p.dist_sq(z)) >= cut {
                        h += 1;
                    }
                }
            } else {
                h = 1; // coincident with an emitter
            }
            covered += u64::from(h);
            sum_h += f64::from(h);
            count_sq += f64::from(h) * f64::from(h);
        }
        remaining -= batch;
        chunk_id += 1;
    }
    let _ = covered;

    let n = samples as f64;
    let mean = sum_h / n;
    let var = ((count_sq / n) - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        value: mean,
        ci_halfwidth: 1.96 * (var / n).sqrt(),
        samples,
    })
}

/// Sweep request: evaluate every scheme at every `(beta, alpha)` pair, at a
/// common emitter density.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Emitter density shared by all schemes (grids derive their spacing).
    pub lambda: f64,
    /// Optional Monte-Carlo cross-check for ALOHA points: (trials, seed).
    pub aloha_mc: Option<(u64, u64)>,
}

/// One sweep evaluation; `sigma`/`capacity` are absent when it failed.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub beta: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma: Option<f64>,
    pub capacity: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub error: Option<String>,
}

/// Evaluate the full grid of sweep points. Individual failures are recorded
/// in the corresponding point rather than aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepPoint> {
    use rayon::prelude::*;
    let mut grid = Vec::new();
    for &scheme in &spec.schemes {
        for &alpha in &spec.alphas {
            for &beta in &spec.betas {
                grid.push((scheme, alpha, beta));
            }
        }
    }
    // Points are independent; parallel map preserves their order.
    grid.into_par_iter()
        .map(|(scheme, alpha, beta)| eval_sweep_point(spec, scheme, alpha, beta))
        .collect()
}

/// Evaluate one (scheme, alpha, beta) sweep point at the spec's density.
fn eval_sweep_point(spec: &SweepSpec, scheme: Scheme, alpha: f64, beta: f64) -> SweepPoint {
    let result = match scheme {
        Scheme::Aloha => {
            aloha_capacity(beta, alpha).map(|r| (r.capacity / spec.lambda, r.capacity))
        }
        Scheme::Grid(kind) => {
            let d = kind.spacing_for_density(spec.lambda);
            grid_capacity(kind, d, alpha, beta).map(|r| (r.sigma, r.capacity))
        }
    };
    let result = result.and_then(|(sigma, capacity)| {
        let ci = match (scheme, spec.aloha_mc) {
            (Scheme::Aloha, Some((trials, seed))) => {
                let mc = mc_aloha_sigma(spec.lambda, beta, alpha, trials, seed)?;
                Some(mc.ci_halfwidth * spec.lambda)
            }
            _ => Option::None,
        };
        Ok((sigma, capacity, ci))
    });
    match result {
        Ok((sigma, capacity, ci)) => SweepPoint {
            scheme,
            beta,
            alpha,
            lambda: spec.lambda,
            sigma: Some(sigma),
            capacity: Some(capacity),
            ci_halfwidth: ci,
            error: Option::None,
        },
        Err(e) => SweepPoint {
            scheme,
            beta,
            alpha,
            lambda: spec.lambda,
            sigma: Option::None,
            capacity: Option::None,
            ci_halfwidth: Option::None,
            error: Some(e.to_string()),
        },
    }
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "log spacing needs 0 < lo < hi and n >= 2 (got lo={lo}, hi={hi}, n={n})"
        )));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Write sweep results as CSV (`scheme,beta,alpha,lambda,sigma,c,ci_halfwidth`,
/// 9 significant digits, empty cells for failed points).
pub fn write_sweep_csv(points: &[SweepPoint], mut w: impl IoWrite) -> std::io::Result<()> {
    writeln!(w, "scheme,beta,alpha,lambda,sigma,c,ci_halfwidth")?;
    for p in points {
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.8e}"));
        writeln!(
            w,
            "{},{:.8e},{:.8e},{:.8e},{},{},{}",
            p.scheme,
            p.beta,
            p.alpha,
            p.lambda,
            fmt_opt(p.sigma),
            fmt_opt(p.capacity),
            fmt_opt(p.ci_halfwidth),
        )?;
    }
    Ok(())
}

/// Write a gnuplot-friendly whitespace table with one block per scheme
/// (blocks separated by blank lines, ready for `plot ... index N`).
pub fn write_gnuplot_table(points: &[SweepPoint], mut w: impl IoWrite) -> std::io::Result<()> {
    writeln!(w, "# local-capacity sweep")?;
    writeln!(w, "# columns: beta alpha lambda c")?;
    let mut schemes: Vec<Scheme> = Vec::new();
    for p in points {
        if !schemes.contains(&p.scheme) {
            schemes.push(p.scheme);
        }
    }
    for (bi, scheme) in schemes.iter().enumerate() {
        if bi > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        writeln!(w, "# scheme: {scheme}")?;
        for p in points.iter().filter(|p| p.scheme == *scheme) {
            if let Some(c) = p.capacity {
                writeln!(w, "{:.8e} {:.8e} {:.8e} {:.8e}", p.beta, p.alpha, p.lambda, c)?;
            }
        }
    }
    Ok(())
}

fn nearest_index(field: &SirField, z: Vec2) -> usize {
    field
        .nearest_emitter(z)
        .expect("lattice fields are non-empty")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn aloha_reference_values() {
        // c = sinc(2 pi / alpha) * beta^(-2/alpha), frozen references.
        assert_relative_eq!(
            aloha_capacity(10.0, 4.0).unwrap().capacity,
            0.201_316_848_417_948_17,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            aloha_capacity(10.0, 100.0).unwrap().capacity,
            0.954_364_350_107_723_9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            aloha_capacity(10.0, 3.0).unwrap().capacity,
            0.089_085_157_343_525_23,
            max_relative = 1e-12
        );
    }

    #[test]
    fn aloha_capacity_improves_with_alpha_and_degrades_with_beta() {
        let c = |beta: f64, alpha: f64| aloha_capacity(beta, alpha).unwrap().capacity;
        assert!(c(10.0, 3.0) < c(10.0, 4.0));
        assert!(c(10.0, 4.0) < c(10.0, 8.0));
        assert!(c(20.0, 4.0) < c(10.0, 4.0));
        // Large alpha approaches 1: reception shrinks to the clearance disk.
        assert!((c(10.0, 1000.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn aloha_sigma_scales_inversely_with_density() {
        let a = aloha_sigma(1e-3, 10.0, 4.0).unwrap();
        let b = aloha_sigma(2e-3, 10.0, 4.0).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-12);
        assert!(aloha_sigma(0.0, 10.0, 4.0).is_err());
        assert!(aloha_capacity(10.0, 2.0).is_err());
    }

    #[test]
    fn spacing_for_density_round_trips() {
        for kind in [
            LatticeKind::Square,
            LatticeKind::Hexagonal,
            LatticeKind::Triangular,
        ] {
            let lambda = 1.0 / 625.0;
            let d = kind.spacing_for_density(lambda);
            assert_relative_eq!(kind.density(d), lambda, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_capacity_is_spacing_invariant() {
        // c depends only on the lattice geometry (homothety invariance).
        let a = grid_capacity(LatticeKind::Square, 25.0, 4.0, 10.0).unwrap();
        let b = grid_capacity(LatticeKind::Square, 50.0, 4.0, 10.0).unwrap();
        assert_relative_eq!(a.capacity, b.capacity, max_relative = 1e-3);
        assert_relative_eq!(a.sigma * a.lambda, a.capacity, max_relative = 1e-12);
        assert!(a.capacity > 0.0 && a.capacity <= 1.0);
    }

    #[test]
    fn triangular_beats_square_at_equal_density() {
        let lambda = 1.0 / 625.0;
        let sq = grid_capacity(
            LatticeKind::Square,
            LatticeKind::Square.spacing_for_density(lambda),
            4.0,
            10.0,
        )
        .unwrap();
        let tri = grid_capacity(
            LatticeKind::Triangular,
            LatticeKind::Triangular.spacing_for_density(lambda),
            4.0,
            10.0,
        )
        .unwrap();
        assert!(
            tri.capacity > sq.capacity,
            "triangular {} should beat square {}",
            tri.capacity,
            sq.capacity
        );
    }

    #[test]
    fn mc_aloha_agrees_with_closed_form_quickly() {
        let lambda = 1e-3;
        let mc = mc_aloha_sigma(lambda, 10.0, 4.0, 1500, 7).unwrap();
        let exact = aloha_sigma(lambda, 10.0, 4.0).unwrap();
        let tol = (3.0 * mc.ci_halfwidth).max(0.05 * exact);
        assert!(
            (mc.value - exact).abs() <= tol,
            "mc {} vs exact {} (ci {})",
            mc.value,
            exact,
            mc.ci_halfwidth
        );
        assert!(mc.ci_halfwidth > 0.0 && mc.ci_halfwidth < 0.2 * exact);
    }

    #[test]
    fn mc_aloha_is_deterministic_per_seed() {
        let a = mc_aloha_sigma(1e-3, 10.0, 4.0, 64, 11).unwrap();
        let b = mc_aloha_sigma(1e-3, 10.0, 4.0, 64, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = mc_aloha_sigma(1e-3, 10.0, 4.0, 64, 12).unwrap();
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn mc_grid_coverage_matches_traced_capacity() {
        let d = 25.0;
        let traced = grid_capacity(LatticeKind::Square, d, 4.0, 10.0).unwrap();
        let mc = mc_grid_coverage(LatticeKind::Square, d, 4.0, 10.0, 40_000, 3).unwrap();
        let tol = (4.0 * mc.ci_halfwidth).max(0.01 * traced.capacity);
        assert!(
            (mc.value - traced.capacity).abs() <= tol,
            "mc {} vs traced {} (ci {})",
            mc.value,
            traced.capacity,
            mc.ci_halfwidth
        );
    }

    #[test]
    fn mc_grid_coverage_is_deterministic_per_seed() {
        let a = mc_grid_coverage(LatticeKind::Triangular, 25.0, 4.0, 10.0, 2048, 5).unwrap();
        let b = mc_grid_coverage(LatticeKind::Triangular, 25.0, 4.0, 10.0, 2048, 5).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn log_spacing_endpoints_and_monotonicity() {
        let v = log_spaced(1.0, 100.0, 5).unwrap();
        assert_eq!(v.len(), 5);
        assert_relative_eq!(v[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(v[4], 100.0, max_relative = 1e-12);
        assert_relative_eq!(v[2], 10.0, max_relative = 1e-12);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(log_spaced(0.0, 1.0, 5).is_err());
        assert!(log_spaced(1.0, 0.5, 5).is_err());
    }

    #[test]
    fn sweep_records_failures_without_aborting() {
        let spec = SweepSpec {
            schemes: vec![Scheme::Aloha, Scheme::Grid(LatticeKind::Square)],
            betas: vec![0.5, 10.0], // beta = 0.5 cannot be traced on a grid
            alphas: vec![4.0],
            lambda: 1.0 / 625.0,
            aloha_mc: None,
        };
        let points = run_sweep(&spec);
        assert_eq!(points.len(), 4);
        let grid_fail = points
            .iter()
            .find(|p| p.scheme == Scheme::Grid(LatticeKind::Square) && p.beta == 0.5)
            .unwrap();
        assert!(grid_fail.capacity.is_none() && grid_fail.error.is_some());
        let aloha_ok = points
            .iter()
            .find(|p| p.scheme == Scheme::Aloha && p.beta == 10.0)
            .unwrap();
        assert_relative_eq!(
            aloha_ok.capacity.unwrap(),
            0.201_316_848_417_948_17,
            max_relative = 1e-12
        );

        let mut csv = Vec::new();
        write_sweep_csv(&points, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scheme,beta,alpha,lambda,sigma,c,ci_halfwidth");
        assert_eq!(lines.len(), 5);
        // Failed rows keep the grid shape with empty value cells.
        let failed_line = lines
            .iter()
            .find(|l| l.starts_with("square,5.0"))
            .expect("failed square row present");
        assert!(failed_line.ends_with(",,,"));

        let mut table = Vec::new();
        write_gnuplot_table(&points, &mut table).unwrap();
        let table = String::from_utf8(table).unwrap();
        assert!(table.contains("# scheme: aloha"));
        assert!(table.contains("# scheme: square"));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("square".parse::<Scheme>().unwrap(), Scheme::Grid(LatticeKind::Square));
        assert_eq!(
            "HEX".parse::<Scheme>().unwrap(),
            Scheme::Grid(LatticeKind::Hexagonal)
        );
        assert_eq!(
            "tri".parse::<Scheme>().unwrap(),
            Scheme::Grid(LatticeKind::Triangular)
        );
        assert_eq!("aloha".parse::<Scheme>().unwrap(), Scheme::Aloha);
        assert!("voronoi".parse::<Scheme>().is_err());
    }
}
