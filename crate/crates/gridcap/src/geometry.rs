//! Planar primitives: vectors, 2x2 matrices, axis-aligned windows, polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in the plane, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product `self x other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(self, other: Vec2) -> f64 {
        (self - other).norm_sq()
    }

    pub fn dist(self, other: Vec2) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Rotate a quarter turn clockwise: (x, y) -> (y, -x).
    pub fn perp_clockwise(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// A 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    /// Generator of counterclockwise rotations: d/dt R(t) at t = 0.
    pub const ROTATION_GENERATOR: Mat2 = Mat2::new(0.0, -1.0, 1.0, 0.0);
    /// Traceless shear along x.
    pub const SHEAR: Mat2 = Mat2::new(0.0, 1.0, 0.0, 0.0);
    /// Traceless anisotropic stretch diag(1, -1).
    pub const STRETCH: Mat2 = Mat2::new(1.0, 0.0, 0.0, -1.0);

    pub const fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Mat2 { xx, xy, yx, yy }
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }
}

/// Axis-aligned rectangular window; inclusion is closed on all edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Vec2,
    pub half_width: f64,
    pub half_height: f64,
}

impl Window {
    pub fn new(center: Vec2, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0) || !(half_height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "window half extents must be positive (got {half_width} x {half_height})"
            )));
        }
        Ok(Window {
            center,
            half_width,
            half_height,
        })
    }

    /// Square window of the given full side length, centered at the origin.
    pub fn centered_square(side: f64) -> Result<Self> {
        Window::new(Vec2::ZERO, side / 2.0, side / 2.0)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (p.x - self.center.x).abs() <= self.half_width
            && (p.y - self.center.y).abs() <= self.half_height
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_height
    }

    pub fn min_x(&self) -> f64 {
        self.center.x - self.half_width
    }

    pub fn max_x(&self) -> f64 {
        self.center.x + self.half_width
    }

    pub fn min_y(&self) -> f64 {
        self.center.y - self.half_height
    }

    pub fn max_y(&self) -> f64 {
        self.center.y + self.half_height
    }
}

/// Shoelace area of a closed polygon given as a polyline (closing edge implicit).
///
/// Vertices are shifted to the first vertex before accumulating, which keeps the
/// evaluation well conditioned for small polygons far from the origin.
pub fn polygon_area(vertices: &[Vec2]) -> Result<f64> {
    Ok(signed_polygon_area(vertices)?.abs())
}

/// Signed shoelace area: positive for counterclockwise orientation.
pub fn signed_polygon_area(vertices: &[Vec2]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::TooFewVertices {
            count: vertices.len(),
        });
    }
    let origin = vertices[0];
    let mut twice_area = 0.0;
    let mut prev = vertices[vertices.len() - 1] - origin;
    for &v in vertices {
        let cur = v - origin;
        twice_area += prev.cross(cur);
        prev = cur;
    }
    Ok(0.5 * twice_area)
}

/// Even-odd point-in-polygon test (closing edge implicit).
pub fn point_in_polygon(p: Vec2, vertices: &[Vec2]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Axis-aligned bounding box of a vertex list, as (min corner, max corner).
pub fn polygon_bbox(vertices: &[Vec2]) -> Option<(Vec2, Vec2)> {
    let first = *vertices.first()?;
    let mut lo = first;
    let mut hi = first;
    for &v in &vertices[1..] {
        lo.x = lo.x.min(v.x);
        lo.y = lo.y.min(v.y);
        hi.x = hi.x.max(v.x);
        hi.y = hi.y.max(v.y);
    }
    Some((lo, hi))
}

/// Sutherland-Hodgman clip of a polygon against a rectangular window.
///
/// Returns the (possibly empty) clipped vertex list.
pub fn clip_polygon_to_window(vertices: &[Vec2], window: &Window) -> Vec<Vec2> {
    // Each half-plane is (inside predicate, intersection with its boundary line).
    let edges: [(Box<dyn Fn(Vec2) -> bool>, Box<dyn Fn(Vec2, Vec2) -> Vec2>); 4] = [
        (
            Box::new(|p: Vec2| p.x >= window.min_x()),
            Box::new(|a: Vec2, b: Vec2| intersect_vertical(a, b, window.min_x())),
        ),
        (
            Box::new(|p: Vec2| p.x <= window.max_x()),
            Box::new(|a: Vec2, b: Vec2| intersect_vertical(a, b, window.max_x())),
        ),
        (
            Box::new(|p: Vec2| p.y >= window.min_y()),
            Box::new(|a: Vec2, b: Vec2| intersect_horizontal(a, b, window.min_y())),
        ),
        (
            Box::new(|p: Vec2| p.y <= window.max_y()),
            Box::new(|a: Vec2, b: Vec2| intersect_horizontal(a, b, window.max_y())),
        ),
    ];

    let mut current = vertices.to_vec();
    for (inside, intersect) in &edges {
        if current.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(current.len() + 4);
        let mut prev = current[current.len() - 1];
        for &v in &current {
            let v_in = inside(v);
            let p_in = inside(prev);
            if v_in {
                if !p_in {
                    next.push(intersect(prev, v));
                }
                next.push(v);
            } else if p_in {
                next.push(intersect(prev, v));
            }
            prev = v;
        }
        current = next;
    }
    current
}

fn intersect_vertical(a: Vec2, b: Vec2, x: f64) -> Vec2 {
    let t = (x - a.x) / (b.x - a.x);
    Vec2::new(x, a.y + t * (b.y - a.y))
}

fn intersect_horizontal(a: Vec2, b: Vec2, y: f64) -> Vec2 {
    let t = (y - a.y) / (b.y - a.y);
    Vec2::new(a.x + t * (b.x - a.x), y)
}

/// Diagnostic: does the closed polygon have a proper self-intersection?
///
/// O(n^2); intended for validation output, not hot paths.
pub fn polygon_self_intersects(vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    if n < 4 {
        return false;
    }
    let seg = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 2)..n {
            // Skip adjacent segments (sharing a vertex), including the wrap pair.
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = seg(i);
            let (c, d) = seg(j);
            if segments_properly_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn segments_properly_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let orient = |p: Vec2, q: Vec2, r: Vec2| (q - p).cross(r - p);
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    (o1 * o2 < 0.0) && (o3 * o4 < 0.0)
}
