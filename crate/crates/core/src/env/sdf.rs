use std::fmt::Write as _;

use super::{EnvError, OccupancyGrid};
use crate::model::Vec2;

/// Signed distance field over the cells of an occupancy grid.
///
/// Free cells hold the distance from their center to the nearest occupied
/// cell center, occupied cells hold minus the distance to the nearest free
/// cell center. Values are clamped to `+-ceiling` (the map diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct Sdf {
    pub origin: [f64; 2],
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub ceiling: f64,
}

/// Squared 1D distance transform of a sampled function (lower envelope of
/// parabolas), linear in the number of samples.
fn edt_1d(f: &[f64], out: &mut [f64], hull: &mut [usize], breaks: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    hull[0] = 0;
    breaks[0] = f64::NEG_INFINITY;
    breaks[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        if f[hull[k]] == f64::INFINITY {
            hull[k] = q;
            continue;
        }
        loop {
            let v = hull[k];
            let s = ((f[q] + (q * q) as f64) - (f[v] + (v * v) as f64)) / (2.0 * (q - v) as f64);
            if s <= breaks[k] && k > 0 {
                k -= 1;
                continue;
            }
            k += 1;
            hull[k] = q;
            breaks[k] = s;
            breaks[k + 1] = f64::INFINITY;
            break;
        }
    }
    if f[hull[0]] == f64::INFINITY {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        while breaks[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - hull[k] as f64;
        *o = d * d + f[hull[k]];
    }
}

/// Builds the field with two sweeps over the grid. The downward sweep
/// stores the vertical distance from each cell to the nearest cell of the
/// other kind above it; the upward sweep completes it with the cells below
/// and immediately runs the row envelopes of both transforms while the row
/// is in cache.
pub fn build_sdf(grid: &OccupancyGrid) -> Sdf {
    let (w, h) = (grid.width, grid.height);
    let res = grid.resolution;
    let ceiling = res * ((w * w + h * h) as f64).sqrt();
    let occ = &grid.occupied;
    let mut values = vec![f64::INFINITY; w * h];
    for iy in 1..h {
        let (done, rest) = values.split_at_mut(iy * w);
        let above = &done[(iy - 1) * w..];
        for ix in 0..w {
            let i = iy * w + ix;
            rest[ix] = if occ[i] != occ[i - w] { 1.0 } else { above[ix] + 1.0 };
        }
    }
    let mut below = vec![f64::INFINITY; w];
    let mut to_obstacle = vec![0.0; w];
    let mut to_free = vec![0.0; w];
    let mut out = vec![0.0; w];
    let mut hull = vec![0usize; w];
    let mut breaks = vec![0.0; w + 1];
    for iy in (0..h).rev() {
        let row = iy * w;
        for ix in 0..w {
            let i = row + ix;
            let down = if iy + 1 < h && occ[i] != occ[i + w] { 1.0 } else { below[ix] + 1.0 };
            let v = values[i].min(down);
            below[ix] = v;
            let (o, f) = if occ[i] { (0.0, v * v) } else { (v * v, 0.0) };
            to_obstacle[ix] = o;
            to_free[ix] = f;
        }
        let cells = &mut values[row..row + w];
        edt_1d(&to_obstacle, &mut out, &mut hull, &mut breaks);
        for (c, (d, o)) in cells.iter_mut().zip(out.iter().zip(&occ[row..row + w])) {
            if !o {
                *c = (res * d.sqrt()).min(ceiling);
            }
        }
        edt_1d(&to_free, &mut out, &mut hull, &mut breaks);
        for (c, (d, o)) in cells.iter_mut().zip(out.iter().zip(&occ[row..row + w])) {
            if *o {
                *c = -(res * d.sqrt()).min(ceiling);
            }
        }
    }
    Sdf { origin: grid.origin, resolution: res, width: w, height: h, values, ceiling }
}

impl Sdf {
    pub fn cell_value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.width + ix]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn in_map(&self, p: Vec2) -> bool {
        let fx = (p.x - self.origin[0]) / self.resolution;
        let fy = (p.y - self.origin[1]) / self.resolution;
        fx >= 0.0 && fy >= 0.0 && fx < self.width as f64 && fy < self.height as f64
    }

    /// Signed distance at `p` by bilinear interpolation between cell
    /// centers, with the exact gradient of the interpolant. Off-map queries
    /// return the ceiling and a zero gradient; within the outer half cell the
    /// field is held constant across the border.
    pub fn query(&self, p: Vec2) -> (f64, Vec2) {
        if !self.in_map(p) {
            return (self.ceiling, Vec2::zeros());
        }
        let res = self.resolution;
        let fx = (p.x - self.origin[0]) / res - 0.5;
        let fy = (p.y - self.origin[1]) / res - 0.5;
        let (ix, tx, gx_on) = Self::axis(fx, self.width);
        let (iy, ty, gy_on) = Self::axis(fy, self.height);
        let ix1 = (ix + 1).min(self.width - 1);
        let iy1 = (iy + 1).min(self.height - 1);
        let v00 = self.cell_value(ix, iy);
        let v10 = self.cell_value(ix1, iy);
        let v01 = self.cell_value(ix, iy1);
        let v11 = self.cell_value(ix1, iy1);
        let bottom = v00 + (v10 - v00) * tx;
        let top = v01 + (v11 - v01) * tx;
        let value = bottom + (top - bottom) * ty;
        let dx = ((v10 - v00) * (1.0 - ty) + (v11 - v01) * ty) / res;
        let dy = (top - bottom) / res;
        (value, Vec2::new(if gx_on { dx } else { 0.0 }, if gy_on { dy } else { 0.0 }))
    }

    pub fn value(&self, p: Vec2) -> f64 {
        self.query(p).0
    }

    /// Lower cell index, fraction toward the next one, and whether the
    /// coordinate lies between two centers (gradient defined).
    fn axis(f: f64, n: usize) -> (usize, f64, bool) {
        if n == 1 || f <= 0.0 {
            return (0, 0.0, false);
        }
        let last = (n - 1) as f64;
        if f >= last {
            return (n - 1, 0.0, false);
        }
        let i = f.floor();
        (i as usize, f - i, true)
    }

    /// Text dump: a `SDF` magic line, `width height`, `resolution origin_x
    /// origin_y ceiling`, then one line per grid row (bottom row first) of
    /// space-separated values. Floats use the shortest round-trip decimal
    /// form, so identical fields produce identical bytes on every platform.
    pub fn to_dump(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 8 + 64);
        s.push_str("SDF\n");
        let _ = writeln!(s, "{} {}", self.width, self.height);
        let _ = writeln!(
            s,
            "{:?} {:?} {:?} {:?}",
            self.resolution, self.origin[0], self.origin[1], self.ceiling
        );
        for row in self.values.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self, EnvError> {
        let err = |line: usize, msg: &str| EnvError::GridFormat { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("missing {what}")));
        let (_, magic) = next("magic")?;
        if magic.trim() != "SDF" {
            return Err(err(1, "expected SDF magic"));
        }
        let parse_all = |ln: usize, l: &str| -> Result<Vec<f64>, EnvError> {
            l.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| err(ln + 1, t))).collect()
        };
        let (ln, dims) = next("dimensions")?;
        let dims = parse_all(ln, dims)?;
        if dims.len() != 2 {
            return Err(err(ln + 1, "expected width height"));
        }
        let (width, height) = (dims[0] as usize, dims[1] as usize);
        let (ln, geo) = next("geometry")?;
        let geo = parse_all(ln, geo)?;
        if geo.len() != 4 {
            return Err(err(ln + 1, "expected resolution origin_x origin_y ceiling"));
        }
        let mut values = Vec::with_capacity(width * height);
        for _ in 0..height {
            let (ln, row) = next("row")?;
            let row = parse_all(ln, row)?;
            if row.len() != width {
                return Err(err(ln + 1, "row length mismatch"));
            }
            values.extend(row);
        }
        Ok(Self {
            origin: [geo[1], geo[2]],
            resolution: geo[0],
            width,
            height,
            values,
            ceiling: geo[3],
        })
    }
}
