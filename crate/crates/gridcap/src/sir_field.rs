//! Signal-to-interference evaluation over an emitter set.
//!
//! All emitters transmit simultaneously at unit power with power-law path
//! loss `r^-alpha`, `alpha > 2`; thermal noise is negligible. For emitter `i`
//! and location `z`:
//!
//! - SIR:   `S_i(z) = |z - z_i|^-alpha / sum_{j != i} |z - z_j|^-alpha`
//! - share: `g_i(z) = |z - z_i|^-alpha / sum_j |z - z_j|^-alpha`
//!
//! with the exact identities `g = S / (1 + S)` and `S = g / (1 - g)`. Emitter
//! `i` is decodable at `z` when `S_i(z) >= beta`, equivalently when
//! `g_i(z) >= beta / (1 + beta)` (see [`share_threshold`]).
//!
//! # Interference truncation
//!
//! The model network is infinite, a realized set is finite, and summing every
//! in-window emitter is wasteful: the far field contributes a tail
//! `2 pi lambda R^(2-alpha) / (alpha - 2)` beyond radius `R` (continuum
//! approximation of density `lambda`). [`Truncation::RelativeTail`] picks the
//! radius `R_t` at which that tail equals `epsilon * d^-alpha` — a fraction
//! `epsilon` of a nearest-neighbor-scale term — so every SIR is exact to
//! roughly `epsilon` relative in the interference. Sums include exactly the
//! emitters within `R_t` of the *query point*, making the evaluation
//! translation-covariant and independent of which emitter is "own".

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Vec2, Window};
use crate::lattice::EmitterSet;
use crate::spatial::UniformGrid;

/// Default relative tail size for [`Truncation::RelativeTail`].
pub const DEFAULT_TAIL_EPSILON: f64 = 1e-3;

/// Decodability in terms of the normalized share: `g >= beta / (1 + beta)`.
pub fn share_threshold(beta: f64) -> f64 {
    beta / (1.0 + beta)
}

/// Interference truncation policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Truncate where the continuum tail falls below `epsilon * d^-alpha`
    /// (`d` = nearest-neighbor distance). The radius is floored at `2 d` and
    /// capped at the window half-extent.
    RelativeTail { epsilon: f64 },
    /// Fixed truncation radius in meters. Useful when several related fields
    /// must sum over congruent neighbor sets (e.g. deformation derivatives).
    Radius(f64),
    /// No truncation: sum every emitter in the set.
    None,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::RelativeTail {
            epsilon: DEFAULT_TAIL_EPSILON,
        }
    }
}

/// Propagation and decoding parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    /// Path-loss exponent; must exceed 2 for the interference to converge.
    pub alpha: f64,
    /// SIR capture threshold (linear, not dB).
    pub beta: f64,
    pub truncation: Truncation,
}

impl FieldParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        FieldParams {
            alpha,
            beta,
            truncation: Truncation::default(),
        }
        .validated()
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Result<Self> {
        self.truncation = truncation;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !self.alpha.is_finite() || self.alpha <= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must be finite and > 2 (got {})",
                self.alpha
            )));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "SIR threshold must be finite and positive (got {})",
                self.beta
            )));
        }
        match self.truncation {
            Truncation::RelativeTail { epsilon } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "tail fraction must lie in (0, 1) (got {epsilon})"
                    )));
                }
            }
            Truncation::Radius(r) => {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "truncation radius must be positive and finite (got {r})"
                    )));
                }
            }
            Truncation::None => {}
        }
        Ok(self)
    }

    /// Share-space decoding threshold `beta / (1 + beta)`.
    pub fn share_threshold(&self) -> f64 {
        share_threshold(self.beta)
    }
}

/// Path-loss kernel `r^-alpha` specialized by exponent shape. The common
/// `alpha = 4` avoids `powf` entirely; integer exponents use `powi`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum PathLoss {
    /// `alpha == 4`: `(1/r^2)^2`.
    Quartic,
    /// Even integer `alpha = 2k`: `(1/r^2)^k`.
    IntHalf(i32),
    /// Odd integer `alpha = 2k + 1`: `(1/r^2)^k * sqrt(1/r^2)`.
    OddHalf(i32),
    /// Anything else: `(r^2)^(-alpha/2)` via `powf`.
    General(f64),
}

impl PathLoss {
    pub(crate) fn from_alpha(alpha: f64) -> Self {
        if alpha == 4.0 {
            PathLoss::Quartic
        } else if alpha.fract() == 0.0 && alpha <= 2.0e9 {
            let a = alpha as i64;
            if a % 2 == 0 {
                PathLoss::IntHalf((a / 2) as i32)
            } else {
                PathLoss::OddHalf((a / 2) as i32)
            }
        } else {
            PathLoss::General(-alpha / 2.0)
        }
    }

    /// `r^-alpha` from the squared distance.
    #[inline(always)]
    pub(crate) fn eval(self, r_sq: f64) -> f64 {
        match self {
            PathLoss::Quartic => {
                let inv = 1.0 / r_sq;
                inv * inv
            }
            PathLoss::IntHalf(k) => (1.0 / r_sq).powi(k),
            PathLoss::OddHalf(k) => {
                let inv = 1.0 / r_sq;
                inv.powi(k) * inv.sqrt()
            }
            PathLoss::General(e) => r_sq.powf(e),
        }
    }
}

#[inline(always)]
fn sum_terms<F: Fn(f64, f64) -> f64>(
    xs: &[f64],
    ys: &[f64],
    z: Vec2,
    rt_sq: f64,
    n_of: F,
) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let dx = z.x - x;
        let dy = z.y - y;
        let r_sq = dx * dx + dy * dy;
        // Branch-free truncation mask; out-of-radius terms add exact +0.0 and
        // leave the partial-sum sequence bit-identical to a pre-filtered sum.
        let mask = (r_sq <= rt_sq) as u32 as f64;
        acc += n_of(r_sq, 1.0 / r_sq) * mask;
    }
    acc
}

#[inline(always)]
fn sum_terms_grad<F: Fn(f64, f64) -> f64>(
    xs: &[f64],
    ys: &[f64],
    z: Vec2,
    rt_sq: f64,
    alpha: f64,
    n_of: F,
) -> (f64, f64, f64) {
    debug_assert_eq!(xs.len(), ys.len());
    let (mut acc, mut gx, mut gy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys.iter()) {
        let dx = z.x - x;
        let dy = z.y - y;
        let r_sq = dx * dx + dy * dy;
        let inv = 1.0 / r_sq;
        let mask = (r_sq <= rt_sq) as u32 as f64;
        let n = n_of(r_sq, inv) * mask;
        // d/dz of r^-alpha is -alpha r^-alpha (z - z_j) / r^2.
        let coef = -alpha * n * inv;
        acc += n;
        gx += coef * dx;
        gy += coef * dy;
    }
    (acc, gx, gy)
}

/// Sum of `|z - p_j|^-alpha` over the listed coordinates, truncated at
/// `sqrt(rt_sq)`. Summation order is the slice order.
pub(crate) fn accumulate(xs: &[f64], ys: &[f64], z: Vec2, rt_sq: f64, pl: PathLoss) -> f64 {
    match pl {
        PathLoss::Quartic => sum_terms(xs, ys, z, rt_sq, |_, inv| inv * inv),
        PathLoss::IntHalf(k) => sum_terms(xs, ys, z, rt_sq, |_, inv| inv.powi(k)),
        PathLoss::OddHalf(k) => sum_terms(xs, ys, z, rt_sq, |_, inv| inv.powi(k) * inv.sqrt()),
        PathLoss::General(e) => sum_terms(xs, ys, z, rt_sq, |r_sq, _| r_sq.powf(e)),
    }
}

/// Like [`accumulate`] but also returns the gradient of the sum w.r.t. `z`.
pub(crate) fn accumulate_grad(
    xs: &[f64],
    ys: &[f64],
    z: Vec2,
    rt_sq: f64,
    pl: PathLoss,
    alpha: f64,
) -> (f64, Vec2) {
    let (s, gx, gy) = match pl {
        PathLoss::Quartic => sum_terms_grad(xs, ys, z, rt_sq, alpha, |_, inv| inv * inv),
        PathLoss::IntHalf(k) => sum_terms_grad(xs, ys, z, rt_sq, alpha, |_, inv| inv.powi(k)),
        PathLoss::OddHalf(k) => {
            sum_terms_grad(xs, ys, z, rt_sq, alpha, |_, inv| inv.powi(k) * inv.sqrt())
        }
        PathLoss::General(e) => sum_terms_grad(xs, ys, z, rt_sq, alpha, |r_sq, _| r_sq.powf(e)),
    };
    (s, Vec2::new(gx, gy))
}

/// Point evaluation summary at a location (see [`SirField::sample`]).
#[derive(Clone, Copy, Debug)]
pub struct FieldSample {
    /// Index of the nearest emitter.
    pub nearest: usize,
    /// Distance to it (meters).
    pub distance: f64,
    /// Its SIR (`+inf` exactly at the emitter).
    pub sir: f64,
    /// Its normalized share in `[0, 1]`.
    pub share: f64,
    /// Number of decodable emitters here (0 or 1 when `beta > 1`).
    pub coverage: u32,
}

/// SIR / share / coverage evaluator over a fixed emitter set.
///
/// Construction resolves the truncation radius once; all queries then share
/// it, so results are deterministic and mutually consistent. The field is
/// cheap to clone (positions and the spatial index are shared).
#[derive(Clone, Debug)]
pub struct SirField {
    positions: Arc<[Vec2]>,
    index: Arc<UniformGrid>,
    params: FieldParams,
    pl: PathLoss,
    window: Window,
    density: f64,
    nn_distance: f64,
    r_t: f64,
    /// Single-emitter displacement overlay: `(index, new position)`.
    moved: Option<(usize, Vec2)>,
    /// How far the overlay position strays from its indexed cell.
    moved_slack: f64,
}

impl SirField {
    pub fn new(set: &EmitterSet, params: FieldParams) -> Result<Self> {
        let params = params.validated()?;
        let density = set.density();
        let nn = set.nn_distance();
        let window = set.window();
        let r_t = resolve_truncation_radius(params.truncation, params.alpha, density, nn, &window);
        let positions = set.positions_arc();
        // Cells around the neighbor spacing keep nearest-neighbor searches
        // tight; for huge truncation radii coarser cells reduce walk overhead.
        let cell = nn.max(if r_t.is_finite() { r_t / 24.0 } else { 0.0 });
        let index = UniformGrid::build(&positions, cell);
        Ok(SirField {
            positions,
            index: Arc::new(index),
            params,
            pl: PathLoss::from_alpha(params.alpha),
            window,
            density,
            nn_distance: nn,
            r_t,
            moved: None,
            moved_slack: 0.0,
        })
    }

    /// A view of the same set with emitter `i` displaced to `new_pos`. The
    /// truncation radius and spatial index are inherited, so evaluations on
    /// the two views differ only through the displaced emitter — exactly what
    /// finite-difference probes need.
    pub fn with_moved(&self, i: usize, new_pos: Vec2) -> Result<Self> {
        if i >= self.positions.len() {
            return Err(Error::InvalidParameter(format!(
                "emitter index {i} out of range ({} emitters)",
                self.positions.len()
            )));
        }
        let mut f = self.clone();
        f.moved = Some((i, new_pos));
        f.moved_slack = self.positions[i].dist(new_pos);
        Ok(f)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Effective position of emitter `i` (honors a displacement overlay).
    pub fn position(&self, i: usize) -> Vec2 {
        match self.moved {
            Some((m, p)) if m == i => p,
            _ => self.positions[i],
        }
    }

    /// Position of emitter `i` in the underlying set, ignoring any
    /// displacement overlay.
    pub fn base_position(&self, i: usize) -> Vec2 {
        self.positions[i]
    }

    /// The active displacement overlay, if any.
    pub fn overlay(&self) -> Option<(usize, Vec2)> {
        self.moved
    }

    /// Resolved interference truncation radius (meters; `+inf` for
    /// [`Truncation::None`]).
    pub fn truncation_radius(&self) -> f64 {
        self.r_t
    }

    /// Continuum bound on the neglected interference beyond the truncation
    /// radius: `2 pi lambda R_t^(2-alpha) / (alpha - 2)`.
    pub fn tail_bound(&self) -> f64 {
        if self.r_t.is_finite() {
            2.0 * std::f64::consts::PI * self.density * self.r_t.powf(2.0 - self.params.alpha)
                / (self.params.alpha - 2.0)
        } else {
            0.0
        }
    }

    /// Nearest emitter to `z` and its distance.
    pub fn nearest_emitter(&self, z: Vec2) -> Option<(usize, f64)> {
        let base = self.index.nearest_excluding(&self.positions, z, None)?;
        match self.moved {
            Option::None => Some(base),
            Some((m, p)) => {
                let dm = p.dist(z);
                let other = if base.0 == m {
                    self.index.nearest_excluding(&self.positions, z, Some(m))
                } else {
                    Some(base)
                };
                match other {
                    Some((j, dj)) if dj <= dm => Some((j, dj)),
                    _ => Some((m, dm)),
                }
            }
        }
    }

    /// Indices of emitters within `radius` of `z` (ascending), optionally
    /// excluding one. Distances use effective positions.
    pub fn neighbors_within(&self, z: Vec2, radius: f64, exclude: Option<usize>) -> Vec<usize> {
        let r_sq = radius * radius;
        let search = if radius.is_finite() {
            radius + self.moved_slack
        } else {
            f64::INFINITY
        };
        let mut out = Vec::new();
        self.index
            .for_each_candidate_in_disk(&self.positions, z, search, |j, p| {
                let j = j as usize;
                if Some(j) == exclude {
                    return;
                }
                let pos = match self.moved {
                    Some((m, q)) if m == j => q,
                    _ => p,
                };
                if pos.dist_sq(z) <= r_sq {
                    out.push(j);
                }
            });
        out.sort_unstable();
        out
    }

    /// Interference at `z` as seen by emitter `own`: the truncated sum of
    /// `|z - z_j|^-alpha` over `j != own` with `|z - z_j| <= R_t`.
    pub fn interference(&self, own: usize, z: Vec2) -> f64 {
        let idx = self.neighbors_within(z, self.r_t, Some(own));
        let (xs, ys) = self.gather(&idx);
        accumulate(&xs, &ys, z, self.rt_sq(), self.pl)
    }

    /// SIR of emitter `i` at `z`. Returns `+inf` exactly at the emitter and
    /// when no interferer lies within the truncation radius.
    pub fn sir(&self, i: usize, z: Vec2) -> f64 {
        let r_sq = self.position(i).dist_sq(z);
        if r_sq == 0.0 {
            return f64::INFINITY;
        }
        let own = self.pl.eval(r_sq);
        own / self.interference(i, z)
    }

    /// Normalized share `g_i(z) in [0, 1]`; equals 1 exactly at the emitter.
    pub fn power_share(&self, i: usize, z: Vec2) -> f64 {
        let r_sq = self.position(i).dist_sq(z);
        if r_sq == 0.0 {
            return 1.0;
        }
        let own = self.pl.eval(r_sq);
        let interference = self.interference(i, z);
        if own.is_infinite() {
            return 1.0;
        }
        own / (own + interference)
    }

    /// SIR and its spatial gradient at `z`.
    ///
    /// Errors: [`Error::NoInterferers`] when the truncated interference is
    /// zero (SIR is `+inf` there), [`Error::GradientUnderflow`] when the
    /// gradient is zero or non-finite (e.g. at the emitter itself).
    pub fn sir_and_gradient(&self, i: usize, z: Vec2) -> Result<(f64, Vec2)> {
        let zi = self.position(i);
        let dz = z - zi;
        let r_sq = dz.norm_sq();
        if r_sq == 0.0 {
            return Err(Error::GradientUnderflow { x: z.x, y: z.y });
        }
        let own = self.pl.eval(r_sq);
        let idx = self.neighbors_within(z, self.r_t, Some(i));
        let (xs, ys) = self.gather(&idx);
        let (interf, grad_i) =
            accumulate_grad(&xs, &ys, z, self.rt_sq(), self.pl, self.params.alpha);
        if interf == 0.0 {
            return Err(Error::NoInterferers { index: i });
        }
        let s = own / interf;
        // Logarithmic form S * (grad(own)/own - grad(I)/I) keeps intermediate
        // magnitudes near S even when own and I underflow toward the subnormal
        // range (large alpha).
        let grad_own_over_own = dz * (-self.params.alpha / r_sq);
        let grad = (grad_own_over_own - grad_i * (1.0 / interf)) * s;
        if !grad.x.is_finite() || !grad.y.is_finite() || (grad.x == 0.0 && grad.y == 0.0) {
            return Err(Error::GradientUnderflow { x: z.x, y: z.y });
        }
        Ok((s, grad))
    }

    /// Spatial gradient of `S_i` at `z` (see [`SirField::sir_and_gradient`]).
    pub fn sir_gradient(&self, i: usize, z: Vec2) -> Result<Vec2> {
        Ok(self.sir_and_gradient(i, z)?.1)
    }

    /// Number of emitters decodable at `z`: `h(z) = #{i : S_i(z) >= beta}`.
    /// At most 1 when `beta > 1`; can exceed 1 for smaller thresholds.
    pub fn coverage_count(&self, z: Vec2) -> u32 {
        let idx = self.neighbors_within(z, self.r_t, Option::None);
        if idx.is_empty() {
            return 0;
        }
        let mut terms = Vec::with_capacity(idx.len());
        let mut total = 0.0;
        for &j in &idx {
            let n = self.pl.eval(self.position(j).dist_sq(z));
            terms.push(n);
            total += n;
        }
        if total.is_infinite() {
            // Coincident with one (or more) emitters: those have share 1.
            return terms.iter().filter(|n| n.is_infinite()).count() as u32;
        }
        // g_j >= beta/(1+beta) with the shared denominator is exactly
        // S_j >= beta; counting in share space needs one pass and no div.
        let threshold = self.params.share_threshold() * total;
        terms.iter().filter(|&&n| n >= threshold).count() as u32
    }

    /// Convenience bundle: nearest emitter, its SIR and share, and coverage.
    pub fn sample(&self, z: Vec2) -> FieldSample {
        let (nearest, distance) = self
            .nearest_emitter(z)
            .expect("field has at least one emitter");
        FieldSample {
            nearest,
            distance,
            sir: self.sir(nearest, z),
            share: self.power_share(nearest, z),
            coverage: self.coverage_count(z),
        }
    }

    pub(crate) fn rt_sq(&self) -> f64 {
        if self.r_t.is_finite() {
            self.r_t * self.r_t
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn path_loss(&self) -> PathLoss {
        self.pl
    }

    pub(crate) fn nn_distance(&self) -> f64 {
        self.nn_distance
    }

    /// Coordinates of the given emitters (effective positions), struct-of-
    /// arrays layout for the accumulation kernels.
    pub(crate) fn gather(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(idx.len());
        let mut ys = Vec::with_capacity(idx.len());
        for &j in idx {
            let p = self.position(j);
            xs.push(p.x);
            ys.push(p.y);
        }
        (xs, ys)
    }
}

fn resolve_truncation_radius(
    truncation: Truncation,
    alpha: f64,
    density: f64,
    nn: f64,
    window: &Window,
) -> f64 {
    match truncation {
        Truncation::Radius(r) => r,
        Truncation::None => f64::INFINITY,
        Truncation::RelativeTail { epsilon } => {
            // Solve 2 pi lambda R^(2-alpha) / (alpha - 2) = epsilon * nn^-alpha.
            let num = 2.0 * std::f64::consts::PI * density * nn.powf(alpha);
            let r = (num / ((alpha - 2.0) * epsilon)).powf(1.0 / (alpha - 2.0));
            r.max(2.0 * nn).min(window.half_width.min(window.half_height))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{EmitterSet, LatticeKind};
    use approx::assert_relative_eq;

    fn pair_field(d: f64, alpha: f64, beta: f64) -> SirField {
        let w = Window::centered_square(4.0 * d).unwrap();
        let set = EmitterSet::custom(vec![Vec2::ZERO, Vec2::new(d, 0.0)], w).unwrap();
        let params = FieldParams::new(alpha, beta)
            .unwrap()
            .with_truncation(Truncation::None)
            .unwrap();
        SirField::new(&set, params).unwrap()
    }

    fn square_field(d: f64, side: f64, alpha: f64, beta: f64, trunc: Truncation) -> SirField {
        let set = EmitterSet::lattice(
            LatticeKind::Square,
            d,
            Window::centered_square(side).unwrap(),
            Vec2::ZERO,
        )
        .unwrap();
        let params = FieldParams::new(alpha, beta)
            .unwrap()
            .with_truncation(trunc)
            .unwrap();
        SirField::new(&set, params).unwrap()
    }

    #[test]
    fn share_threshold_values() {
        assert_relative_eq!(share_threshold(10.0), 10.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(share_threshold(1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(FieldParams::new(2.0, 10.0).is_err());
        assert!(FieldParams::new(1.5, 10.0).is_err());
        assert!(FieldParams::new(4.0, 0.0).is_err());
        assert!(FieldParams::new(4.0, -1.0).is_err());
        assert!(FieldParams::new(f64::NAN, 10.0).is_err());
        let p = FieldParams::new(4.0, 10.0).unwrap();
        assert!(p.with_truncation(Truncation::Radius(-1.0)).is_err());
        assert!(
            p.with_truncation(Truncation::RelativeTail { epsilon: 0.0 })
                .is_err()
        );
    }

    #[test]
    fn two_emitter_sir_matches_closed_form() {
        // On the segment between two emitters D apart, at distance r from the
        // own emitter: S = ((D - r) / r)^alpha.
        let d = 30.0;
        for alpha in [2.5, 3.0, 4.0, 6.0, 100.0] {
            let field = pair_field(d, alpha, 10.0);
            for frac in [0.2, 0.35, 0.5, 0.65] {
                let r = frac * d;
                let z = Vec2::new(r, 0.0);
                let expected = ((d - r) / r).powf(alpha);
                assert_relative_eq!(field.sir(0, z), expected, max_relative = 1e-12);
            }
            // Midpoint: SIR exactly 1 for both emitters.
            let mid = Vec2::new(d / 2.0, 0.0);
            assert_relative_eq!(field.sir(0, mid), 1.0, max_relative = 1e-12);
            assert_relative_eq!(field.sir(1, mid), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn capture_radius_on_the_segment() {
        // S = beta exactly at r = D / (1 + beta^(1/alpha)).
        let d = 25.0;
        for (alpha, beta) in [(4.0, 10.0), (3.0, 5.0), (100.0, 10.0), (2.5, 2.0)] {
            let field = pair_field(d, alpha, beta);
            let r = d / (1.0 + beta.powf(1.0 / alpha));
            let s = field.sir(0, Vec2::new(r, 0.0));
            assert_relative_eq!(s, beta, max_relative = 1e-9);
        }
    }

    #[test]
    fn share_and_sir_identities() {
        let field = square_field(25.0, 500.0, 4.0, 10.0, Truncation::None);
        let c = 220; // index games avoided: probe several generic points
        assert!(c < field.len());
        for z in [
            Vec2::new(3.7, 5.1),
            Vec2::new(-41.0, 12.3),
            Vec2::new(100.5, -88.2),
        ] {
            let (i, _) = field.nearest_emitter(z).unwrap();
            let s = field.sir(i, z);
            let g = field.power_share(i, z);
            assert_relative_eq!(g, s / (1.0 + s), max_relative = 1e-12);
            assert_relative_eq!(s, g / (1.0 - g), max_relative = 1e-12);
        }
    }

    #[test]
    fn shares_sum_to_one_without_truncation() {
        let field = square_field(25.0, 300.0, 4.0, 10.0, Truncation::None);
        for z in [Vec2::new(7.0, 3.0), Vec2::new(-60.0, 41.5), Vec2::new(0.1, 124.9)] {
            let total: f64 = (0..field.len()).map(|i| field.power_share(i, z)).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn shares_sum_near_one_with_truncation() {
        let field = square_field(25.0, 2500.0, 4.0, 10.0, Truncation::default());
        let z = Vec2::new(7.0, 3.0);
        let idx = field.neighbors_within(z, field.truncation_radius(), Option::None);
        let total: f64 = idx.iter().map(|&i| field.power_share(i, z)).sum();
        // Each share's denominator misses at most the tail bound.
        assert_relative_eq!(total, 1.0, max_relative = 1e-2);
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn sentinels_at_emitters() {
        let field = square_field(25.0, 200.0, 4.0, 10.0, Truncation::None);
        let (i, _) = field.nearest_emitter(Vec2::ZERO).unwrap();
        let zi = field.position(i);
        assert_eq!(field.sir(i, zi), f64::INFINITY);
        assert_eq!(field.power_share(i, zi), 1.0);
        assert_eq!(field.coverage_count(zi), 1);
        assert!(matches!(
            field.sir_and_gradient(i, zi),
            Err(Error::GradientUnderflow { .. })
        ));
        // On top of a *different* emitter the SIR of i is zero.
        let other = field.nearest_emitter(Vec2::new(25.0, 0.0)).unwrap().0;
        assert_ne!(other, i);
        assert_eq!(field.sir(i, field.position(other)), 0.0);
    }

    #[test]
    fn single_emitter_has_no_interference() {
        let w = Window::centered_square(10.0).unwrap();
        let set = EmitterSet::custom(vec![Vec2::ZERO], w).unwrap();
        let field = SirField::new(&set, FieldParams::new(4.0, 10.0).unwrap()).unwrap();
        let z = Vec2::new(1.0, 2.0);
        assert_eq!(field.sir(0, z), f64::INFINITY);
        assert_eq!(field.coverage_count(z), 1);
        assert!(matches!(
            field.sir_and_gradient(0, z),
            Err(Error::NoInterferers { index: 0 })
        ));
    }

    #[test]
    fn coverage_examples() {
        // beta = 0.5 < 1: at the midpoint of a pair both emitters decode.
        let field = pair_field(20.0, 4.0, 0.5);
        assert_eq!(field.coverage_count(Vec2::new(10.0, 0.0)), 2);
        assert_eq!(field.coverage_count(Vec2::new(2.0, 0.0)), 1);

        // beta = 10 > 1: coverage is 0/1-valued everywhere.
        let field = square_field(25.0, 400.0, 4.0, 10.0, Truncation::default());
        let mut seen_covered = false;
        let mut seen_uncovered = false;
        for ix in -20..=20 {
            for iy in -20..=20 {
                let z = Vec2::new(ix as f64 * 2.43, iy as f64 * 2.17);
                let h = field.coverage_count(z);
                assert!(h <= 1, "beta > 1 must give 0/1 coverage, got {h} at {z:?}");
                seen_covered |= h == 1;
                seen_uncovered |= h == 0;
            }
        }
        assert!(seen_covered && seen_uncovered);
    }

    #[test]
    fn coverage_matches_sir_threshold() {
        let field = square_field(25.0, 400.0, 4.0, 10.0, Truncation::default());
        for z in [
            Vec2::new(1.0, 1.0),
            Vec2::new(6.0, -2.0),
            Vec2::new(9.0, 9.0),
            Vec2::new(12.49, 0.0),
        ] {
            let (i, _) = field.nearest_emitter(z).unwrap();
            let expected = u32::from(field.sir(i, z) >= field.params().beta);
            assert_eq!(field.coverage_count(z), expected, "at {z:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Central differences at grid-incommensurate probe points, three
        // path-loss branches.
        for alpha in [4.0, 3.0, 2.5] {
            let field = square_field(25.0, 600.0, alpha, 10.0, Truncation::default());
            let h = 1e-4;
            let mut checked = 0;
            for k in 0..40 {
                let t = k as f64;
                let z = Vec2::new(
                    (t * 13.37).sin() * 120.0,
                    (t * 7.91 + 1.0).cos() * 120.0,
                );
                let (i, dist) = field.nearest_emitter(z).unwrap();
                if dist < 1.0 {
                    continue; // too close: FD step comparable to curvature scale
                }
                let (_, grad) = field.sir_and_gradient(i, z).unwrap();
                let fx = (field.sir(i, z + Vec2::new(h, 0.0))
                    - field.sir(i, z - Vec2::new(h, 0.0)))
                    / (2.0 * h);
                let fy = (field.sir(i, z + Vec2::new(0.0, h))
                    - field.sir(i, z - Vec2::new(0.0, h)))
                    / (2.0 * h);
                // Absolute floor sits above central-difference cancellation
                // noise (~S * ulp / h); symmetry lines zero a component exactly.
                assert_relative_eq!(grad.x, fx, max_relative = 1e-5, epsilon = 1e-9);
                assert_relative_eq!(grad.y, fy, max_relative = 1e-5, epsilon = 1e-9);
                checked += 1;
            }
            assert!(checked >= 30, "only {checked} probe points for alpha={alpha}");
        }
    }

    #[test]
    fn truncation_radius_and_tail_bound() {
        // alpha = 4, d = 25, lambda = 1/625, epsilon = 1e-3:
        // R_t = sqrt(2 pi lambda d^4 / (2 eps)) = 1401.25 m.
        let field = square_field(25.0, 4000.0, 4.0, 10.0, Truncation::default());
        assert_relative_eq!(field.truncation_radius(), 1401.247_844, max_relative = 1e-6);
        // At the resolved radius the tail equals epsilon * d^-alpha by
        // construction.
        let expected_tail = 1e-3 * 25.0f64.powi(-4);
        assert_relative_eq!(field.tail_bound(), expected_tail, max_relative = 1e-9);

        // Smaller window: capped at the half-extent.
        let capped = square_field(25.0, 400.0, 4.0, 10.0, Truncation::default());
        assert_relative_eq!(capped.truncation_radius(), 200.0);

        // Large alpha: floored at 2 nearest-neighbor spacings.
        let floored = square_field(25.0, 400.0, 100.0, 10.0, Truncation::default());
        assert_relative_eq!(floored.truncation_radius(), 50.0);

        // Explicit radius and no truncation.
        let fixed = square_field(25.0, 400.0, 4.0, 10.0, Truncation::Radius(123.0));
        assert_relative_eq!(fixed.truncation_radius(), 123.0);
        let none = square_field(25.0, 400.0, 4.0, 10.0, Truncation::None);
        assert!(none.truncation_radius().is_infinite());
        assert_eq!(none.tail_bound(), 0.0);
    }

    #[test]
    fn truncated_sir_close_to_full_sum() {
        let full = square_field(25.0, 2500.0, 4.0, 10.0, Truncation::None);
        let trunc = square_field(25.0, 2500.0, 4.0, 10.0, Truncation::default());
        for z in [Vec2::new(5.0, 2.0), Vec2::new(11.0, -9.0), Vec2::new(3.3, 12.0)] {
            let (i, _) = full.nearest_emitter(z).unwrap();
            let a = full.sir(i, z);
            let b = trunc.sir(i, z);
            // Truncation removes interference, so SIR can only grow, and by
            // no more than the tail fraction.
            assert!(b >= a);
            assert_relative_eq!(a, b, max_relative = 2e-3);
        }
    }

    #[test]
    fn moved_overlay_matches_rebuilt_set() {
        let w = Window::centered_square(300.0).unwrap();
        let base = EmitterSet::lattice(LatticeKind::Square, 25.0, w, Vec2::ZERO).unwrap();
        let params = FieldParams::new(4.0, 10.0)
            .unwrap()
            .with_truncation(Truncation::None)
            .unwrap();
        let field = SirField::new(&base, params).unwrap();
        let m = field.nearest_emitter(Vec2::ZERO).unwrap().0;
        let new_pos = base.positions()[m] + Vec2::new(17.0, -6.0);
        let moved = field.with_moved(m, new_pos).unwrap();

        let mut rebuilt_pts = base.positions().to_vec();
        rebuilt_pts[m] = new_pos;
        let rebuilt =
            SirField::new(&EmitterSet::custom(rebuilt_pts, w).unwrap(), params).unwrap();

        for z in [Vec2::new(4.0, 9.0), Vec2::new(-30.0, 14.0), new_pos + Vec2::new(3.0, 1.0)] {
            let (i, di) = moved.nearest_emitter(z).unwrap();
            let (j, dj) = rebuilt.nearest_emitter(z).unwrap();
            assert_eq!(i, j);
            assert_relative_eq!(di, dj, epsilon = 1e-12);
            assert_eq!(moved.sir(i, z).to_bits(), rebuilt.sir(i, z).to_bits());
            assert_eq!(
                moved.coverage_count(z),
                rebuilt.coverage_count(z),
            );
        }
        // The base field is untouched.
        assert_eq!(field.position(m), base.positions()[m]);
    }

    #[test]
    fn moving_an_interferer_away_raises_sir() {
        let field = pair_field(20.0, 4.0, 10.0);
        let z = Vec2::new(4.0, 0.0);
        let before = field.sir(0, z);
        let farther = field.with_moved(1, Vec2::new(35.0, 0.0)).unwrap();
        assert!(farther.sir(0, z) > before);
        assert!(field.with_moved(99, Vec2::ZERO).is_err());
    }

    #[test]
    fn sample_bundles_consistent_values() {
        let field = square_field(25.0, 400.0, 4.0, 10.0, Truncation::default());
        let z = Vec2::new(3.0, -4.0);
        let s = field.sample(z);
        assert_eq!(s.nearest, field.nearest_emitter(z).unwrap().0);
        assert_relative_eq!(s.distance, 5.0, epsilon = 1e-12);
        assert_eq!(s.sir.to_bits(), field.sir(s.nearest, z).to_bits());
        assert_relative_eq!(s.share, s.sir / (1.0 + s.sir), max_relative = 1e-12);
        assert_eq!(s.coverage, field.coverage_count(z));
    }

    #[test]
    fn large_alpha_remains_finite_near_boundary() {
        let field = square_field(12.5, 300.0, 100.0, 10.0, Truncation::default());
        // Probe along a cell diagonal: shares must be finite and in [0, 1].
        for k in 1..40 {
            let t = k as f64 / 40.0;
            let z = Vec2::new(6.25 * t, 6.25 * t);
            let (i, _) = field.nearest_emitter(z).unwrap();
            let g = field.power_share(i, z);
            assert!((0.0..=1.0).contains(&g), "share {g} at {z:?}");
            let h = field.coverage_count(z);
            assert!(h <= 1);
        }
    }
}
