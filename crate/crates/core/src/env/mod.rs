//! Planar obstacle worlds: polygon obstacles, their occupancy raster, the
//! signed distance field built on it, and convex target regions.

mod sdf;

pub use sdf::{build_sdf, Sdf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Vec2;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("world bounds are degenerate: {0}")]
    EmptyBounds(String),
    #[error("target region is not convex")]
    NotConvex,
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("malformed grid dump at line {line}: {msg}")]
    GridFormat { line: usize, msg: String },
}

/// Axis-aligned rectangle `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }
}

/// Simple polygon given by its vertices, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self { vertices }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.vertices.iter().map(|v| Vec2::new(v[0], v[1]))
    }

    /// Point-in-polygon by crossing parity; points on an edge count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        for i in 0..n {
            let a = Vec2::new(self.vertices[i][0], self.vertices[i][1]);
            let b = Vec2::new(self.vertices[(i + 1) % n][0], self.vertices[(i + 1) % n][1]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn bbox(&self) -> Option<Bounds> {
        let mut it = self.points();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        Some(Bounds::new([lo.x, lo.y], [hi.x, hi.y]))
    }

    /// Euclidean distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        let pts: Vec<Vec2> = self.points().collect();
        (0..pts.len())
            .map(|i| segment_distance(p, pts[i], pts[(i + 1) % pts.len()]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    let ab = b - a;
    let ap = p - a;
    let scale = ab.norm().max(1.0);
    cross(ab, ap).abs() <= 1e-12 * scale * scale
        && ap.dot(&ab) >= -1e-12
        && (p - b).dot(&(a - b)) >= -1e-12
}

pub(crate) fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    let t = if len_sq > 0.0 { ((p - a).dot(&ab) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + t * ab)).norm()
}

/// Convex hull by monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 1] - hull[hull.len() - 2], p - hull[hull.len() - 2]) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Obstacles of a planar world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub bounds: Bounds,
    #[serde(default)]
    pub polygons: Vec<Polygon>,
}

/// Row-major occupancy raster; cell `(ix, iy)` has its center at
/// `origin + resolution * (ix + 0.5, iy + 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub origin: [f64; 2],
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new_free(origin: [f64; 2], resolution: f64, width: usize, height: usize) -> Self {
        Self { origin, resolution, width, height, occupied: vec![false; width * height] }
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.index(ix, iy);
        self.occupied[i] = occupied;
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, if it lies on the map.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin[0]) / self.resolution;
        let fy = (p.y - self.origin[1]) / self.resolution;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    pub fn in_map(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }
}

/// Marks every cell whose center lies inside (or on the boundary of) some
/// polygon.
pub fn rasterize(obstacles: &ObstacleSet, resolution: f64) -> Result<OccupancyGrid, EnvError> {
    if !(resolution > 0.0) {
        return Err(EnvError::EmptyBounds(format!("resolution {resolution} is not positive")));
    }
    let b = &obstacles.bounds;
    let width = (b.width() / resolution).round();
    let height = (b.height() / resolution).round();
    if !(width >= 1.0 && height >= 1.0) {
        return Err(EnvError::EmptyBounds(format!(
            "{} x {} m at resolution {resolution}",
            b.width(),
            b.height()
        )));
    }
    let mut grid = OccupancyGrid::new_free(b.min, resolution, width as usize, height as usize);
    for poly in &obstacles.polygons {
        let Some(bb) = poly.bbox() else { continue };
        let to_cell = |v: f64, o: f64, n: usize| -> usize {
            (((v - o) / resolution - 0.5).floor().max(0.0) as usize).min(n)
        };
        let (x0, x1) = (to_cell(bb.min[0], b.min[0], grid.width), to_cell(bb.max[0], b.min[0], grid.width));
        let (y0, y1) =
            (to_cell(bb.min[1], b.min[1], grid.height), to_cell(bb.max[1], b.min[1], grid.height));
        for iy in y0..=y1.min(grid.height - 1) {
            for ix in x0..=x1.min(grid.width - 1) {
                if poly.contains(grid.cell_center(ix, iy)) {
                    grid.set(ix, iy, true);
                }
            }
        }
    }
    Ok(grid)
}

/// Convex region the whole robot must end inside.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetRegion {
    /// Counter-clockwise vertices `v_0..v_{Ne-1}`; edge `k` runs from `v_k`
    /// to `v_{k+1}`.
    pub vertices: Vec<Vec2>,
    /// Outward unit normal of each edge.
    pub normals: Vec<Vec2>,
    /// Area centroid.
    pub center: Vec2,
}

/// Validates a convex polygon and precomputes its edge normals. Clockwise
/// input is reoriented.
pub fn make_target(vertices: &[[f64; 2]]) -> Result<TargetRegion, EnvError> {
    if vertices.len() < 3 {
        return Err(EnvError::DegeneratePolygon(format!("{} vertices", vertices.len())));
    }
    let mut pts: Vec<Vec2> = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
    let n = pts.len();
    let scale = pts.iter().map(|p| p.amax()).fold(1.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let signed_area2: f64 = (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum();
    if signed_area2.abs() <= eps {
        return Err(EnvError::DegeneratePolygon("zero area".into()));
    }
    if signed_area2 < 0.0 {
        pts.reverse();
    }
    for i in 0..n {
        let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        if (b - a).norm() <= 1e-12 * scale {
            return Err(EnvError::DegeneratePolygon(format!("repeated vertex {i}")));
        }
        let turn = cross(b - a, c - b);
        if turn.abs() <= eps {
            return Err(EnvError::DegeneratePolygon(format!("collinear vertices at {}", (i + 1) % n)));
        }
        if turn < 0.0 {
            return Err(EnvError::NotConvex);
        }
    }
    // a star polygon turns left at every vertex yet winds more than once
    let total_turn: f64 = (0..n)
        .map(|i| {
            let (a, b, c) = (pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
            let (u, v) = (b - a, c - b);
            cross(u, v).atan2(u.dot(&v))
        })
        .sum();
    if (total_turn - std::f64::consts::TAU).abs() > 1e-6 {
        return Err(EnvError::NotConvex);
    }

    let area2: f64 = (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum();
    let mut center = Vec2::zeros();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        center += (a + b) * cross(a, b);
    }
    center /= 3.0 * area2;

    let normals = (0..n)
        .map(|i| {
            let d = pts[(i + 1) % n] - pts[i];
            Vec2::new(d.y, -d.x).normalize()
        })
        .collect();
    Ok(TargetRegion { vertices: pts, normals, center })
}

impl TargetRegion {
    /// Axis-aligned-in-body-frame rectangle centered at `center`, rotated by `yaw`.
    pub fn rectangle(center: Vec2, yaw: f64, length: f64, width: f64) -> Self {
        let r = crate::model::rotation(yaw);
        let (hl, hw) = (0.5 * length, 0.5 * width);
        let corners: Vec<[f64; 2]> = [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)]
            .iter()
            .map(|&(x, y)| {
                let p = center + r * Vec2::new(x, y);
                [p.x, p.y]
            })
            .collect();
        make_target(&corners).expect("rectangle is convex")
    }

    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_midpoint(&self, k: usize) -> Vec2 {
        0.5 * (self.vertices[k] + self.vertices[(k + 1) % self.vertices.len()])
    }

    /// Largest signed half-plane value `n_k . (p - v_k)`; non-positive
    /// exactly when `p` is inside.
    pub fn max_violation(&self, p: Vec2) -> f64 {
        self.normals
            .iter()
            .zip(&self.vertices)
            .map(|(n, v)| n.dot(&(p - v)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.max_violation(p) <= 0.0
    }

    /// Euclidean distance to the region, zero inside.
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn as_polygon(&self) -> Polygon {
        Polygon::new(self.vertices.iter().map(|v| [v.x, v.y]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(polygons: Vec<Polygon>) -> ObstacleSet {
        ObstacleSet { bounds: Bounds::new([0.0, 0.0], [2.0, 2.0]), polygons }
    }

    #[test]
    fn empty_world_is_free() {
        let g = rasterize(&world(vec![]), 0.1).unwrap();
        assert_eq!((g.width, g.height), (20, 20));
        assert_eq!(g.occupied_count(), 0);
    }

    #[test]
    fn square_covers_four_by_four_cells() {
        // edges sit halfway between cell centers
        let sq = Polygon::new(vec![[0.5, 0.5], [0.9, 0.5], [0.9, 0.9], [0.5, 0.9]]);
        let g = rasterize(&world(vec![sq.clone()]), 0.1).unwrap();
        let brute = (0..g.height)
            .flat_map(|iy| (0..g.width).map(move |ix| (ix, iy)))
            .filter(|&(ix, iy)| sq.contains(g.cell_center(ix, iy)))
            .count();
        assert_eq!(brute, 16);
        assert_eq!(g.occupied_count(), 16);
    }

    #[test]
    fn boundary_points_count_as_inside() {
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(sq.contains(Vec2::new(1.0, 0.5)));
        assert!(sq.contains(Vec2::new(0.0, 0.0)));
        assert!(!sq.contains(Vec2::new(1.0 + 1e-9, 0.5)));
    }

    #[test]
    fn polygon_outside_bounds_is_ignored() {
        let far = Polygon::new(vec![[5.0, 5.0], [6.0, 5.0], [6.0, 6.0]]);
        let g = rasterize(&world(vec![far]), 0.1).unwrap();
        assert_eq!(g.occupied_count(), 0);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let w = ObstacleSet { bounds: Bounds::new([0.0, 0.0], [0.0, 3.0]), polygons: vec![] };
        assert!(matches!(rasterize(&w, 0.1), Err(EnvError::EmptyBounds(_))));
    }

    #[test]
    fn unit_square_normals() {
        let t = make_target(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let want = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
        for (n, w) in t.normals.iter().zip(want) {
            assert!((n - Vec2::new(w.0, w.1)).norm() < 1e-15);
        }
        assert!((t.center - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let t = make_target(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        for (k, n) in t.normals.iter().enumerate() {
            assert!(n.dot(&(t.vertices[k] - t.center)) > 0.0);
        }
    }

    #[test]
    fn collinear_and_reflex_rejected() {
        assert!(matches!(
            make_target(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            Err(EnvError::DegeneratePolygon(_))
        ));
        assert!(matches!(
            make_target(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]]),
            Err(EnvError::NotConvex)
        ));
        assert!(matches!(
            make_target(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            Err(EnvError::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn region_distance() {
        let t = TargetRegion::rectangle(Vec2::zeros(), 0.0, 2.0, 1.0);
        assert_eq!(t.distance(Vec2::new(0.3, 0.1)), 0.0);
        assert!((t.distance(Vec2::new(3.0, 0.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn all_vertices_inside_every_half_plane(
                cx in -5.0..5.0f64, cy in -5.0..5.0f64,
                radii in proptest::collection::vec(0.5..2.0f64, 3..9),
                phase in 0.0..6.28f64,
            ) {
                let n = radii.len();
                let pts: Vec<Vec2> = radii.iter().enumerate().map(|(k, r)| {
                    let a = phase + k as f64 * std::f64::consts::TAU / n as f64;
                    Vec2::new(cx + r * a.cos(), cy + r * a.sin())
                }).collect();
                let hull = convex_hull(&pts);
                prop_assume!(hull.len() >= 3);
                let verts: Vec<[f64; 2]> = hull.iter().map(|p| [p.x, p.y]).collect();
                if let Ok(t) = make_target(&verts) {
                    for v in &t.vertices {
                        for (n, vl) in t.normals.iter().zip(&t.vertices) {
                            prop_assert!(n.dot(&(v - vl)) <= 1e-9);
                        }
                    }
                    for (n, v) in t.normals.iter().zip(&t.vertices) {
                        prop_assert!((n.norm() - 1.0).abs() < 1e-12);
                        prop_assert!(n.dot(&(v - t.center)) > 0.0);
                    }
                }
            }
        }
    }
}
