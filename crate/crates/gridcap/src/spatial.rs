//! Uniform-grid spatial index over a fixed point set.
//!
//! Buckets are stored in CSR form (one flat index array plus per-cell offsets),
//! built once per point set and then shared read-only across threads.

use crate::geometry::Vec2;

#[derive(Debug)]
pub struct UniformGrid {
    min: Vec2,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    /// CSR offsets, length nx*ny + 1.
    cell_start: Vec<u32>,
    /// Point indices grouped by cell, ascending within each cell.
    items: Vec<u32>,
}

impl UniformGrid {
    /// Build an index with the given cell size. Handles empty input.
    pub fn build(points: &[Vec2], cell_size: f64) -> Self {
        assert!(
            cell_size > 0.0 && cell_size.is_finite(),
            "cell size must be positive"
        );
        if points.is_empty() {
            return UniformGrid {
                min: Vec2::ZERO,
                inv_cell: 1.0 / cell_size,
                nx: 1,
                ny: 1,
                cell_start: vec![0, 0],
                items: Vec::new(),
            };
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for &p in &points[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let inv_cell = 1.0 / cell_size;
        let nx = (((hi.x - lo.x) * inv_cell).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) * inv_cell).floor() as usize + 1).max(1);

        let cell_of = |p: Vec2| -> usize {
            let cx = (((p.x - lo.x) * inv_cell) as usize).min(nx - 1);
            let cy = (((p.y - lo.y) * inv_cell) as usize).min(ny - 1);
            cy * nx + cx
        };

        // Two-pass counting sort into CSR layout.
        let mut cell_start = vec![0u32; nx * ny + 1];
        for &p in points {
            cell_start[cell_of(p) + 1] += 1;
        }
        for i in 1..cell_start.len() {
            cell_start[i] += cell_start[i - 1];
        }
        let mut items = vec![0u32; points.len()];
        let mut cursor = cell_start.clone();
        for (i, &p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
        UniformGrid {
            min: lo,
            inv_cell,
            nx,
            ny,
            cell_start,
            items,
        }
    }

    /// Visit every indexed point whose cell intersects the disk; the caller
    /// still has to distance-filter. Visit order is deterministic (cell-major,
    /// ascending index within a cell).
    pub fn for_each_candidate_in_disk(
        &self,
        points: &[Vec2],
        center: Vec2,
        radius: f64,
        mut visit: impl FnMut(u32, Vec2),
    ) {
        let cx0 = self.clamp_x(center.x - radius);
        let cx1 = self.clamp_x(center.x + radius);
        let cy0 = self.clamp_y(center.y - radius);
        let cy1 = self.clamp_y(center.y + radius);
        for cy in cy0..=cy1 {
            let row = cy * self.nx;
            let start = self.cell_start[row + cx0] as usize;
            let end = self.cell_start[row + cx1 + 1] as usize;
            // Consecutive cells of one row are contiguous in CSR storage.
            for &i in &self.items[start..end] {
                visit(i, points[i as usize]);
            }
        }
    }

    /// Indices of all points within `radius` of `center` (closed), ascending.
    pub fn query_disk(&self, points: &[Vec2], center: Vec2, radius: f64) -> Vec<u32> {
        let r_sq = radius * radius;
        let mut out = Vec::new();
        self.for_each_candidate_in_disk(points, center, radius, |i, p| {
            if p.dist_sq(center) <= r_sq {
                out.push(i);
            }
        });
        out.sort_unstable();
        out
    }

    /// Nearest indexed point to `center`, excluding `exclude`; expanding-ring search.
    pub fn nearest_excluding(
        &self,
        points: &[Vec2],
        center: Vec2,
        exclude: Option<usize>,
    ) -> Option<(usize, f64)> {
        if points.is_empty() {
            return None;
        }
        let cell = 1.0 / self.inv_cell;
        let mut radius = cell;
        let max_radius = {
            let span_x = self.nx as f64 * cell;
            let span_y = self.ny as f64 * cell;
            (span_x * span_x + span_y * span_y).sqrt() + cell
        };
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_candidate_in_disk(points, center, radius, |i, p| {
                if Some(i as usize) == exclude {
                    return;
                }
                let d_sq = p.dist_sq(center);
                if best.is_none_or(|(_, b)| d_sq < b) {
                    best = Some((i as usize, d_sq));
                }
            });
            // A hit only counts once the search radius covers it, otherwise a
            // closer point could hide in a not-yet-visited cell.
            if let Some((i, d_sq)) = best
                && d_sq.sqrt() <= radius
            {
                return Some((i, d_sq.sqrt()));
            }
            if radius > max_radius {
                return best.map(|(i, d_sq)| (i, d_sq.sqrt()));
            }
            radius *= 2.0;
        }
    }

    fn clamp_x(&self, x: f64) -> usize {
        (((x - self.min.x) * self.inv_cell).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn clamp_y(&self, y: f64) -> usize {
        (((y - self.min.y) * self.inv_cell).floor().max(0.0) as usize).min(self.ny - 1)
    }
}
