//! Linear transfer between the fixed Eulerian grid and moving Lagrangian nodes.

use crate::error::{invalid, Result};
use crate::snapshot::Grid;

/// Piecewise-linear interpolation through strictly increasing `from` nodes,
/// constant beyond the first and last node.
pub fn interp_linear(from: &[f64], values: &[f64], to: &[f64]) -> Result<Vec<f64>> {
    if from.len() != values.len() {
        return Err(invalid("node and value counts differ"));
    }
    if from.is_empty() {
        return Err(invalid("no interpolation nodes"));
    }
    if let Some(j) = from.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("interpolation nodes not strictly increasing at {j}")));
    }
    Ok(to.iter().map(|&x| linear_at(from, values, x)).collect())
}

/// Evaluate at `x` assuming non-decreasing `from`; zero-width intervals take the left value.
pub(crate) fn linear_at(from: &[f64], values: &[f64], x: f64) -> f64 {
    let n = from.len();
    if x <= from[0] {
        return values[0];
    }
    if x >= from[n - 1] {
        return values[n - 1];
    }
    let k = from.partition_point(|&v| v <= x);
    let (x0, x1) = (from[k - 1], from[k]);
    let w = x1 - x0;
    if w <= 0.0 {
        return values[k - 1];
    }
    let a = (x - x0) / w;
    values[k - 1] * (1.0 - a) + values[k] * a
}

/// `a + mod(x - a, len)`, leaving points already in `[a, a+len)` untouched.
pub fn wrap(x: f64, a: f64, len: f64) -> f64 {
    if x >= a && x < a + len {
        return x;
    }
    let w = a + (x - a).rem_euclid(len);
    if w >= a + len {
        a
    } else {
        w
    }
}

/// Nodes wrapped into `[a, a+len)`, sorted, and padded with one shifted copy
/// at each end so interpolation is continuous across the seam.
pub(crate) fn periodic_sorted(nodes: &[f64], values: &[f64], a: f64, len: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pairs: Vec<(f64, f64)> = nodes.iter().zip(values).map(|(&x, &v)| (wrap(x, a, len), v)).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let n = pairs.len();
    let mut xs = Vec::with_capacity(n + 2);
    let mut vs = Vec::with_capacity(n + 2);
    xs.push(pairs[n - 1].0 - len);
    vs.push(pairs[n - 1].1);
    for &(x, v) in &pairs {
        xs.push(x);
        vs.push(v);
    }
    xs.push(pairs[0].0 + len);
    vs.push(pairs[0].1);
    (xs, vs)
}

/// 1D transfer onto `grid` nodes from scattered (possibly unwrapped) nodes.
pub fn nodes_to_grid_1d(nodes: &[f64], values: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    if nodes.len() != values.len() || nodes.is_empty() {
        return Err(invalid("node and value counts differ"));
    }
    let targets = grid.coords(0).to_vec();
    if grid.is_periodic(0) {
        let (a, len) = (grid.bounds()[0].0, grid.length(0));
        let (xs, vs) = periodic_sorted(nodes, values, a, len);
        Ok(targets.iter().map(|&x| linear_at(&xs, &vs, x)).collect())
    } else {
        interp_linear(nodes, values, &targets)
    }
}

/// 1D transfer from a field on `grid` to arbitrary points (wrapped when periodic).
pub fn grid_to_points_1d(field: &[f64], grid: &Grid, points: &[f64]) -> Vec<f64> {
    let n = grid.points()[0];
    let dx = grid.spacing(0);
    let a = grid.bounds()[0].0;
    if grid.is_periodic(0) {
        let len = grid.length(0);
        points
            .iter()
            .map(|&p| {
                let g = (wrap(p, a, len) - a) / dx;
                let i0 = (g.floor() as usize) % n;
                let w = g - g.floor();
                field[i0] * (1.0 - w) + field[(i0 + 1) % n] * w
            })
            .collect()
    } else {
        let xs = grid.coords(0).to_vec();
        points.iter().map(|&p| linear_at(&xs, field, p)).collect()
    }
}

/// Periodic/clamped bilinear sample of a 2D grid field (row-major, y fastest).
pub fn sample_bilinear(field: &[f64], grid: &Grid, px: f64, py: f64) -> f64 {
    let (nx, ny) = (grid.points()[0], grid.points()[1]);
    let locate = |p: f64, axis: usize, n: usize| -> (usize, usize, f64) {
        let (a, _) = grid.bounds()[axis];
        let d = grid.spacing(axis);
        if grid.is_periodic(axis) {
            let g = (wrap(p, a, grid.length(axis)) - a) / d;
            let i0 = (g.floor() as usize) % n;
            (i0, (i0 + 1) % n, g - g.floor())
        } else {
            let g = ((p - a) / d).clamp(0.0, (n - 1) as f64);
            let i0 = (g.floor() as usize).min(n - 2);
            (i0, i0 + 1, g - i0 as f64)
        }
    };
    let (i0, i1, ax) = locate(px, 0, nx);
    let (j0, j1, ay) = locate(py, 1, ny);
    let f = |i: usize, j: usize| field[i * ny + j];
    (1.0 - ax) * (1.0 - ay) * f(i0, j0) + ax * (1.0 - ay) * f(i1, j0) + (1.0 - ax) * ay * f(i0, j1) + ax * ay * f(i1, j1)
}

pub fn grid_to_points_2d(field: &[f64], grid: &Grid, px: &[f64], py: &[f64]) -> Vec<f64> {
    px.iter().zip(py).map(|(&x, &y)| sample_bilinear(field, grid, x, y)).collect()
}

/// Weights taking values on a displaced structured 2D node set to the nodes
/// of a target grid. Each target lies in a displaced cell and is expressed by
/// inverse bilinear coordinates; targets outside every cell copy the nearest node.
#[derive(Debug, Clone)]
pub struct DisplacedMap {
    idx: Vec<[usize; 4]>,
    w: Vec<[f64; 4]>,
    filled_by_nearest: usize,
}

impl DisplacedMap {
    /// `chi`, `zeta` are node coordinates laid out like `reference`; `target` is the output grid.
    pub fn new(reference: &Grid, chi: &[f64], zeta: &[f64], target: &Grid) -> Result<Self> {
        if reference.dim() != 2 || target.dim() != 2 {
            return Err(invalid("displaced map needs 2D grids"));
        }
        let (nx, ny) = (reference.points()[0], reference.points()[1]);
        if chi.len() != nx * ny || zeta.len() != nx * ny {
            return Err(invalid("coordinate arrays do not match the reference grid"));
        }
        let (mx, my) = (target.points()[0], target.points()[1]);
        let (tx0, ty0) = (target.bounds()[0].0, target.bounds()[1].0);
        let (tdx, tdy) = (target.spacing(0), target.spacing(1));
        let (lx, ly) = (reference.length(0), reference.length(1));
        let (per_x, per_y) = (reference.is_periodic(0), reference.is_periodic(1));
        let t_per = (target.is_periodic(0), target.is_periodic(1));

        let mut idx = vec![[usize::MAX; 4]; mx * my];
        let mut w = vec![[0.0; 4]; mx * my];
        let cx = if per_x { nx } else { nx - 1 };
        let cy = if per_y { ny } else { ny - 1 };
        for i in 0..cx {
            let i1 = (i + 1) % nx;
            let sx = if i + 1 == nx { lx } else { 0.0 };
            for j in 0..cy {
                let j1 = (j + 1) % ny;
                let sy = if j + 1 == ny { ly } else { 0.0 };
                let ids = [i * ny + j, i1 * ny + j, i * ny + j1, i1 * ny + j1];
                let px = [chi[ids[0]], chi[ids[1]] + sx, chi[ids[2]], chi[ids[3]] + sx];
                let py = [zeta[ids[0]], zeta[ids[1]], zeta[ids[2]] + sy, zeta[ids[3]] + sy];
                let (xmin, xmax) = minmax(&px);
                let (ymin, ymax) = minmax(&py);
                let k0 = ((xmin - tx0) / tdx - 1e-9).ceil() as i64;
                let k1 = ((xmax - tx0) / tdx + 1e-9).floor() as i64;
                let l0 = ((ymin - ty0) / tdy - 1e-9).ceil() as i64;
                let l1 = ((ymax - ty0) / tdy + 1e-9).floor() as i64;
                for k in k0..=k1 {
                    let Some(kk) = target_index(k, mx, t_per.0) else { continue };
                    let x = tx0 + k as f64 * tdx;
                    for l in l0..=l1 {
                        let Some(ll) = target_index(l, my, t_per.1) else { continue };
                        let slot = kk * my + ll;
                        if idx[slot][0] != usize::MAX {
                            continue;
                        }
                        let y = ty0 + l as f64 * tdy;
                        if let Some((s, t)) = inverse_bilinear(&px, &py, x, y) {
                            idx[slot] = ids;
                            w[slot] = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
                        }
                    }
                }
            }
        }
        let mut filled_by_nearest = 0;
        for slot in 0..mx * my {
            if idx[slot][0] != usize::MAX {
                continue;
            }
            filled_by_nearest += 1;
            let (x, y) = (tx0 + (slot / my) as f64 * tdx, ty0 + (slot % my) as f64 * tdy);
            let mut best = (f64::INFINITY, 0);
            for n in 0..nx * ny {
                let mut dx = chi[n] - x;
                let mut dy = zeta[n] - y;
                if per_x {
                    dx -= (dx / lx).round() * lx;
                }
                if per_y {
                    dy -= (dy / ly).round() * ly;
                }
                let d = dx * dx + dy * dy;
                if d < best.0 {
                    best = (d, n);
                }
            }
            idx[slot] = [best.1; 4];
            w[slot] = [1.0, 0.0, 0.0, 0.0];
        }
        Ok(DisplacedMap { idx, w, filled_by_nearest })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.idx
            .iter()
            .zip(&self.w)
            .map(|(i, w)| w[0] * values[i[0]] + w[1] * values[i[1]] + w[2] * values[i[2]] + w[3] * values[i[3]])
            .collect()
    }

    /// Targets that fell outside every displaced cell.
    pub fn filled_by_nearest(&self) -> usize {
        self.filled_by_nearest
    }
}

fn minmax(v: &[f64; 4]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn target_index(k: i64, n: usize, periodic: bool) -> Option<usize> {
    if periodic {
        Some(k.rem_euclid(n as i64) as usize)
    } else if k >= 0 && (k as usize) < n {
        Some(k as usize)
    } else {
        None
    }
}

/// Local coordinates of `(x, y)` in the quad with corners ordered (0,0), (1,0), (0,1), (1,1).
fn inverse_bilinear(px: &[f64; 4], py: &[f64; 4], x: f64, y: f64) -> Option<(f64, f64)> {
    let (mut s, mut t) = (0.5, 0.5);
    let scale = (px[3] - px[0]).abs() + (py[3] - py[0]).abs() + (px[1] - px[2]).abs() + (py[1] - py[2]).abs();
    for _ in 0..30 {
        let fx = px[0] * (1.0 - s) * (1.0 - t) + px[1] * s * (1.0 - t) + px[2] * (1.0 - s) * t + px[3] * s * t - x;
        let fy = py[0] * (1.0 - s) * (1.0 - t) + py[1] * s * (1.0 - t) + py[2] * (1.0 - s) * t + py[3] * s * t - y;
        let a = (px[1] - px[0]) * (1.0 - t) + (px[3] - px[2]) * t;
        let b = (px[2] - px[0]) * (1.0 - s) + (px[3] - px[1]) * s;
        let c = (py[1] - py[0]) * (1.0 - t) + (py[3] - py[2]) * t;
        let d = (py[2] - py[0]) * (1.0 - s) + (py[3] - py[1]) * s;
        let det = a * d - b * c;
        if det.abs() < 1e-300 {
            return None;
        }
        let ds = (d * fx - b * fy) / det;
        let dt = (a * fy - c * fx) / det;
        s -= ds;
        t -= dt;
        if ds.abs() + dt.abs() < 1e-14 {
            break;
        }
        if !(s.is_finite() && t.is_finite()) || s.abs() > 10.0 || t.abs() > 10.0 {
            return None;
        }
    }
    let fx = px[0] * (1.0 - s) * (1.0 - t) + px[1] * s * (1.0 - t) + px[2] * (1.0 - s) * t + px[3] * s * t - x;
    let fy = py[0] * (1.0 - s) * (1.0 - t) + py[1] * s * (1.0 - t) + py[2] * (1.0 - s) * t + py[3] * s * t - y;
    let tol = 1e-10;
    if fx.abs() + fy.abs() > 1e-9 * scale.max(1e-300) {
        return None;
    }
    if s >= -tol && s <= 1.0 + tol && t >= -tol && t <= 1.0 + tol {
        Some((s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)))
    } else {
        None
    }
}
