//! Emitter point sets: regular lattices, Poisson scatters, and custom layouts.
//!
//! Conventions: `d` is the nearest-neighbor spacing in meters for every lattice
//! kind. The square lattice has 4 neighbors at `d`, the triangular lattice 6,
//! and the hexagonal (honeycomb) lattice 3. Window inclusion is closed on all
//! edges, so boundary points count.

use std::fmt;
use std::io::Write as IoWrite;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Vec2, Window};
use crate::spatial::UniformGrid;

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Regular lattice kinds (a strict subset of [`PatternKind`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    Square,
    Hexagonal,
    Triangular,
}

impl LatticeKind {
    /// Emitters per square meter for spacing `d`.
    pub fn density(self, d: f64) -> f64 {
        match self {
            LatticeKind::Square => 1.0 / (d * d),
            // Honeycomb: two-point basis on a triangular Bravais lattice.
            LatticeKind::Hexagonal => 4.0 / (3.0 * SQRT_3 * d * d),
            LatticeKind::Triangular => 2.0 / (SQRT_3 * d * d),
        }
    }

    /// Spacing that realizes a target density (inverse of [`Self::density`]).
    pub fn spacing_for_density(self, lambda: f64) -> f64 {
        let coef = match self {
            LatticeKind::Square => 1.0,
            LatticeKind::Hexagonal => 4.0 / (3.0 * SQRT_3),
            LatticeKind::Triangular => 2.0 / SQRT_3,
        };
        (coef / lambda).sqrt()
    }

    /// Dimensions of a rectangle that tiles the plane under the lattice
    /// translation group, centered on an emitter: used for cell-uniform sampling.
    pub fn fundamental_cell(self, d: f64) -> (f64, f64) {
        match self {
            LatticeKind::Square => (d, d),
            LatticeKind::Hexagonal => (SQRT_3 * d, 1.5 * d),
            LatticeKind::Triangular => (d, 0.5 * SQRT_3 * d),
        }
    }

    /// Number of translation-equivalence classes of emitters.
    pub fn basis_size(self) -> usize {
        match self {
            LatticeKind::Hexagonal => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeKind::Square => "square",
            LatticeKind::Hexagonal => "hexagonal",
            LatticeKind::Triangular => "triangular",
        };
        f.write_str(s)
    }
}

/// How an emitter set was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Lattice(LatticeKind),
    Poisson,
    Custom,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Lattice(k) => k.fmt(f),
            PatternKind::Poisson => f.write_str("poisson"),
            PatternKind::Custom => f.write_str("custom"),
        }
    }
}

/// An immutable set of emitter positions inside a window.
#[derive(Clone, Debug)]
pub struct EmitterSet {
    positions: Arc<[Vec2]>,
    kind: PatternKind,
    window: Window,
    spacing: Option<f64>,
    rate: Option<f64>,
    seed: Option<u64>,
    /// Translation class per emitter (only multi-class lattices carry this).
    sublattice: Option<Arc<[u8]>>,
    /// Nearest-neighbor distance: exact `d` for lattices, mean-NN estimate for
    /// Poisson, measured minimum for custom sets.
    nn_distance: f64,
}

impl EmitterSet {
    /// Generate a lattice clipped to `window`, translated by `offset`.
    ///
    /// With `offset == 0` and a window centered at the origin, an emitter sits
    /// exactly at the origin for every kind.
    pub fn lattice(kind: LatticeKind, d: f64, window: Window, offset: Vec2) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lattice spacing must be positive and finite (got {d})"
            )));
        }
        let (positions, sublattice) = enumerate_lattice(kind, d, &window, offset);
        if positions.is_empty() {
            return Err(Error::InvalidParameter(
                "window contains no lattice points".into(),
            ));
        }
        let set = EmitterSet {
            positions: positions.into(),
            kind: PatternKind::Lattice(kind),
            window,
            spacing: Some(d),
            rate: None,
            seed: None,
            sublattice: sublattice.map(Into::into),
            nn_distance: d,
        };
        set.validate_spacing(d)?;
        Ok(set)
    }

    /// Homogeneous Poisson sample of intensity `rate` (points per m^2).
    ///
    /// Deterministic for fixed `(rate, window, seed)`: ChaCha8 keyed by `seed`,
    /// one Poisson count draw followed by `2n` uniform coordinate draws.
    pub fn poisson(rate: f64, window: Window, seed: u64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Poisson intensity must be positive and finite (got {rate})"
            )));
        }
        let mean = rate * window.area();
        if mean > 5e7 {
            return Err(Error::InvalidParameter(format!(
                "Poisson sample would contain ~{mean:.1e} points; refusing"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("Poisson({mean}): {e}")))?
            .sample(&mut rng) as u64;
        let positions: Vec<Vec2> = (0..n)
            .map(|_| {
                let x = window.min_x() + rng.random::<f64>() * (2.0 * window.half_width);
                let y = window.min_y() + rng.random::<f64>() * (2.0 * window.half_height);
                Vec2::new(x, y)
            })
            .collect();
        Ok(EmitterSet {
            positions: positions.into(),
            kind: PatternKind::Poisson,
            window,
            spacing: None,
            rate: Some(rate),
            seed: Some(seed),
            sublattice: None,
            // Mean nearest-neighbor distance of a planar Poisson process.
            nn_distance: 0.5 / rate.sqrt(),
        })
    }

    /// Wrap explicit positions. All must lie inside the window and be distinct.
    pub fn custom(positions: Vec<Vec2>, window: Window) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter(
                "custom emitter set must not be empty".into(),
            ));
        }
        for (i, p) in positions.iter().enumerate() {
            if !window.contains(*p) {
                return Err(Error::OutsideWindow {
                    index: i,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        let nn = if positions.len() >= 2 {
            let (min_nn, closest_pair) = min_pairwise_distance(&positions);
            let scale = (window.area() / positions.len() as f64).sqrt();
            if min_nn <= 1e-9 * scale {
                let (a, b) = closest_pair;
                return Err(Error::DuplicateEmitters {
                    first: a,
                    second: b,
                });
            }
            min_nn
        } else {
            0.5 * (window.area() / positions.len() as f64).sqrt()
        };
        Ok(EmitterSet {
            positions: positions.into(),
            kind: PatternKind::Custom,
            window,
            spacing: None,
            rate: None,
            seed: None,
            sublattice: None,
            nn_distance: nn,
        })
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn positions_arc(&self) -> Arc<[Vec2]> {
        Arc::clone(&self.positions)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Analytic emitter density where one exists (lattices and Poisson rate);
    /// falls back to count / window area.
    pub fn density(&self) -> f64 {
        match (self.kind, self.spacing, self.rate) {
            (PatternKind::Lattice(k), Some(d), _) => k.density(d),
            (PatternKind::Poisson, _, Some(rate)) => rate,
            _ => self.positions.len() as f64 / self.window.area(),
        }
    }

    /// Characteristic nearest-neighbor distance (see field truncation).
    pub fn nn_distance(&self) -> f64 {
        self.nn_distance
    }

    /// Translation class of emitter `i` (0 for single-class patterns).
    pub fn sublattice_of(&self, i: usize) -> u8 {
        self.sublattice.as_ref().map_or(0, |s| s[i])
    }

    /// Index of the emitter closest to the window center.
    pub fn center_index(&self) -> Option<usize> {
        let center = self.window.center;
        self.positions
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.dist_sq(center)
                    .partial_cmp(&b.dist_sq(center))
                    .expect("positions are finite")
            })
            .map(|(i, _)| i)
    }

    /// Empirical density: points within `radius` of the window center, divided
    /// by the disk area. The disk must fit inside the window.
    pub fn measured_density(&self, radius: f64) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density disk radius must be positive (got {radius})"
            )));
        }
        if radius > self.window.half_width || radius > self.window.half_height {
            return Err(Error::DiskExceedsWindow {
                radius,
                half_width: self.window.half_width,
                half_height: self.window.half_height,
            });
        }
        let center = self.window.center;
        let r_sq = radius * radius;
        let count = self
            .positions
            .iter()
            .filter(|p| p.dist_sq(center) <= r_sq)
            .count();
        Ok(count as f64 / (std::f64::consts::PI * radius * radius))
    }

    /// Write positions as CSV: header `x,y`, 9 significant digits, meters.
    pub fn write_csv(&self, mut w: impl IoWrite) -> std::io::Result<()> {
        writeln!(w, "x,y")?;
        for p in self.positions.iter() {
            writeln!(w, "{:.8e},{:.8e}", p.x, p.y)?;
        }
        Ok(())
    }

    /// Sidecar metadata (TOML) describing how the set was produced.
    pub fn metadata_toml(&self) -> String {
        #[derive(Serialize)]
        struct Meta {
            kind: String,
            count: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            spacing: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            rate: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            seed: Option<u64>,
            window: WindowMeta,
        }
        #[derive(Serialize)]
        struct WindowMeta {
            center_x: f64,
            center_y: f64,
            half_width: f64,
            half_height: f64,
        }
        let meta = Meta {
            kind: self.kind.to_string(),
            count: self.len(),
            spacing: self.spacing,
            rate: self.rate,
            seed: self.seed,
            window: WindowMeta {
                center_x: self.window.center.x,
                center_y: self.window.center.y,
                half_width: self.window.half_width,
                half_height: self.window.half_height,
            },
        };
        toml::to_string(&meta).expect("metadata serializes")
    }

    /// Check the exact-spacing invariant: every emitter's nearest neighbor sits
    /// at distance `d` within 1e-9 relative (single-point windows are exempt).
    fn validate_spacing(&self, d: f64) -> Result<()> {
        if self.positions.len() < 2 {
            return Ok(());
        }
        let grid = UniformGrid::build(&self.positions, d);
        for i in 0..self.positions.len() {
            let (j, nn) = grid
                .nearest_excluding(&self.positions, self.positions[i], Some(i))
                .expect("set has >= 2 points");
            if nn < 1e-9 * d {
                return Err(Error::DuplicateEmitters {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
            // Window clipping can leave a boundary emitter without its nearest
            // lattice neighbor, so only a too-small distance is an error.
            if nn < d * (1.0 - 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "lattice invariant violated: emitters {i} and {j} are {nn} apart, expected >= {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Minimum pairwise distance and the realizing pair, via a uniform grid.
fn min_pairwise_distance(positions: &[Vec2]) -> (f64, (usize, usize)) {
    let scale = {
        let (lo, hi) = crate::geometry::polygon_bbox(positions).expect("non-empty");
        let span = ((hi.x - lo.x).max(hi.y - lo.y)).max(1e-12);
        (span / (positions.len() as f64).sqrt()).max(1e-12)
    };
    let grid = UniformGrid::build(positions, scale);
    let mut best = f64::INFINITY;
    let mut pair = (0, 0);
    for i in 0..positions.len() {
        if let Some((j, d)) = grid.nearest_excluding(positions, positions[i], Some(i))
            && d < best
        {
            best = d;
            pair = (i.min(j), i.max(j));
        }
    }
    (best, pair)
}

fn enumerate_lattice(
    kind: LatticeKind,
    d: f64,
    window: &Window,
    offset: Vec2,
) -> (Vec<Vec2>, Option<Vec<u8>>) {
    let mut points = Vec::new();
    let mut classes: Vec<u8> = Vec::new();
    let (min_x, max_x) = (window.min_x(), window.max_x());
    let (min_y, max_y) = (window.min_y(), window.max_y());

    // Conservative integer ranges (+-1 guard band), exact window filter after.
    let range = |min_v: f64, max_v: f64, origin: f64, pitch: f64| -> (i64, i64) {
        let lo = ((min_v - origin) / pitch).floor() as i64 - 1;
        let hi = ((max_v - origin) / pitch).ceil() as i64 + 1;
        (lo, hi)
    };

    match kind {
        LatticeKind::Square => {
            let (m0, m1) = range(min_x, max_x, offset.x, d);
            let (n0, n1) = range(min_y, max_y, offset.y, d);
            for n in n0..=n1 {
                for m in m0..=m1 {
                    let p = Vec2::new(m as f64 * d + offset.x, n as f64 * d + offset.y);
                    if window.contains(p) {
                        points.push(p);
                    }
                }
            }
        }
        LatticeKind::Triangular => {
            let row_pitch = 0.5 * SQRT_3 * d;
            let (n0, n1) = range(min_y, max_y, offset.y, row_pitch);
            for n in n0..=n1 {
                let y = n as f64 * row_pitch + offset.y;
                let row_shift = if n.rem_euclid(2) == 1 { 0.5 * d } else { 0.0 };
                let (m0, m1) = range(min_x, max_x, offset.x + row_shift, d);
                for m in m0..=m1 {
                    let p = Vec2::new(m as f64 * d + row_shift + offset.x, y);
                    if window.contains(p) {
                        points.push(p);
                    }
                }
            }
        }
        LatticeKind::Hexagonal => {
            // Bravais vectors a1 = (sqrt(3) d, 0), a2 = (sqrt(3) d / 2, 3d/2),
            // basis points at (0, 0) and (0, d): every vertex has 3 neighbors at d.
            let a1x = SQRT_3 * d;
            let a2x = 0.5 * SQRT_3 * d;
            let a2y = 1.5 * d;
            let (n0, n1) = range(min_y - d, max_y, offset.y, a2y);
            for n in n0..=n1 {
                let base_y = n as f64 * a2y + offset.y;
                let row_x = n as f64 * a2x + offset.x;
                let (m0, m1) = range(min_x, max_x, row_x, a1x);
                for m in m0..=m1 {
                    let x = m as f64 * a1x + row_x;
                    for (class, dy) in [(0u8, 0.0), (1u8, d)] {
                        let p = Vec2::new(x, base_y + dy);
                        if window.contains(p) {
                            points.push(p);
                            classes.push(class);
                        }
                    }
                }
            }
        }
    }

    let classes = if kind.basis_size() > 1 {
        Some(classes)
    } else {
        None
    };
    (points, classes)
}
