//! Eulerian fields from Lagrangian states.

use ndarray::Array2;

use crate::error::{invalid, Error, Result};
use crate::rbf::RbfSystem;
use crate::snapshot::Grid;

use super::interp::{linear_at, wrap, DisplacedMap};
use super::{tangled, LagrangianState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rbf,
    Linear,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(Method::Rbf),
            "linear" => Ok(Method::Linear),
            other => Err(invalid(format!("unknown reconstruction method '{other}'"))),
        }
    }
}

/// What to do with a folded Lagrangian grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TanglePolicy {
    /// Fail with [`Error::Tangled`].
    Reject,
    /// Reorder `(χ, u)` pairs by wrapped coordinate (1D) or accept the first
    /// covering cell (2D), and flag the result.
    Sort,
}

#[derive(Debug, Clone, Copy)]
pub struct ReconstructOptions {
    pub method: Method,
    pub policy: TanglePolicy,
    /// 1D RBF: nodes closer than this fraction of the target spacing are averaged into one.
    pub merge_fraction: f64,
}

impl ReconstructOptions {
    /// RBF in 1D, bilinear in 2D; tangled input rejected.
    pub fn for_dim(dim: usize) -> Self {
        ReconstructOptions {
            method: if dim == 1 { Method::Rbf } else { Method::Linear },
            policy: TanglePolicy::Reject,
            merge_fraction: 0.5,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_policy(mut self, policy: TanglePolicy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// One Eulerian field per state channel, laid out like the target grid.
    pub fields: Vec<Vec<f64>>,
    pub tangled: bool,
    pub min_gap: f64,
    /// 1D: nodes absorbed by merging; 2D: targets filled from the nearest node.
    pub adjusted: usize,
}

/// Reconstruct with default options for `method`, rejecting tangled states.
pub fn reconstruct_eulerian(state: &LagrangianState, target: &Grid, method: Method) -> Result<Vec<Vec<f64>>> {
    let opts = ReconstructOptions::for_dim(state.grid().dim()).with_method(method);
    Ok(reconstruct_with(state, target, &opts)?.fields)
}

pub fn reconstruct_with(state: &LagrangianState, target: &Grid, opts: &ReconstructOptions) -> Result<Reconstruction> {
    let grid = state.grid();
    if target.dim() != grid.dim() {
        return Err(invalid("target grid dimension differs from the reference grid"));
    }
    if grid.len() < 2 {
        return Err(invalid("need at least 2 nodes"));
    }
    let min_gap = state.min_gap();
    let is_tangled = tangled(min_gap, grid);
    if is_tangled && opts.policy == TanglePolicy::Reject {
        return Err(Error::Tangled { step: None, min_gap });
    }
    let (fields, adjusted) = match grid.dim() {
        1 => reconstruct_1d(state, target, opts)?,
        _ => {
            if opts.method == Method::Rbf {
                return Err(invalid("RBF reconstruction is available in 1D only"));
            }
            let map = DisplacedMap::new(grid, &state.coords()[0], &state.coords()[1], target)?;
            (state.values().iter().map(|v| map.apply(v)).collect(), map.filled_by_nearest())
        }
    };
    Ok(Reconstruction { fields, tangled: is_tangled, min_gap, adjusted })
}

fn reconstruct_1d(state: &LagrangianState, target: &Grid, opts: &ReconstructOptions) -> Result<(Vec<Vec<f64>>, usize)> {
    let nv = state.values().len();
    let periodic = target.is_periodic(0);
    let (a, len) = (target.bounds()[0].0, target.length(0));
    let mut order: Vec<(f64, usize)> = state
        .chi()
        .iter()
        .enumerate()
        .map(|(j, &c)| (if periodic { wrap(c, a, len) } else { c }, j))
        .collect();
    order.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut xs: Vec<f64> = order.iter().map(|p| p.0).collect();
    let mut vs: Vec<Vec<f64>> = state.values().iter().map(|v| order.iter().map(|p| v[p.1]).collect()).collect();
    let mut merged = 0;
    if opts.method == Method::Rbf {
        let tol = opts.merge_fraction * target.spacing(0);
        (xs, vs, merged) = merge_clusters(&xs, &vs, tol);
    }
    let n = xs.len();
    if n < 2 {
        return Err(invalid("fewer than 2 distinct nodes"));
    }
    if periodic {
        let pad = match opts.method {
            Method::Linear => 1,
            Method::Rbf => n.min(8),
        };
        let mut px = Vec::with_capacity(n + 2 * pad);
        px.extend(xs[n - pad..].iter().map(|x| x - len));
        px.extend_from_slice(&xs);
        px.extend(xs[..pad].iter().map(|x| x + len));
        xs = px;
        for v in vs.iter_mut() {
            let mut pv = Vec::with_capacity(n + 2 * pad);
            pv.extend_from_slice(&v[n - pad..]);
            pv.extend_from_slice(v);
            pv.extend_from_slice(&v[..pad]);
            *v = pv;
        }
    }
    let targets = target.coords(0).to_vec();
    let fields = match opts.method {
        Method::Linear => vs.iter().map(|v| targets.iter().map(|&x| linear_at(&xs, v, x)).collect()).collect(),
        Method::Rbf => {
            let m = xs.len();
            let nodes = Array2::from_shape_vec((m, 1), xs.clone()).map_err(|e| invalid(e.to_string()))?;
            let values = Array2::from_shape_fn((m, nv), |(i, c)| vs[c][i]);
            let f = RbfSystem::new(nodes.view())?.fit(values.view())?;
            let (lo, hi) = (xs[0], xs[m - 1]);
            let mut out = vec![vec![0.0; targets.len()]; nv];
            for (k, &x) in targets.iter().enumerate() {
                if x < lo || x > hi {
                    let idx = if x < lo { 0 } else { m - 1 };
                    for c in 0..nv {
                        out[c][k] = vs[c][idx];
                    }
                } else {
                    let val = f.eval(&[x])?;
                    for c in 0..nv {
                        out[c][k] = val[c];
                    }
                }
            }
            out
        }
    };
    Ok((fields, merged))
}

/// Average runs of sorted nodes that lie within `tol` of the run's first node.
fn merge_clusters(xs: &[f64], vs: &[Vec<f64>], tol: f64) -> (Vec<f64>, Vec<Vec<f64>>, usize) {
    let n = xs.len();
    let mut ox = Vec::with_capacity(n);
    let mut ov: Vec<Vec<f64>> = vec![Vec::with_capacity(n); vs.len()];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[j + 1] - xs[i] < tol {
            j += 1;
        }
        let w = (j - i + 1) as f64;
        ox.push(xs[i..=j].iter().sum::<f64>() / w);
        for (c, v) in vs.iter().enumerate() {
            ov[c].push(v[i..=j].iter().sum::<f64>() / w);
        }
        i = j + 1;
    }
    let merged = n - ox.len();
    (ox, ov, merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_1d(g: &Grid, chi: Vec<f64>, u: Vec<f64>) -> LagrangianState {
        LagrangianState::new(g.clone(), vec![chi], vec![u]).unwrap()
    }

    #[test]
    fn nodal_exactness() {
        for &periodic in &[false, true] {
            let g = Grid::new_1d(0.0, 2.0, 33, periodic).unwrap();
            let x = g.coords(0).to_vec();
            let u: Vec<f64> = x.iter().map(|v| (3.0 * v).sin() + v).collect();
            let s = state_1d(&g, x.clone(), u.clone());
            for m in [Method::Linear, Method::Rbf] {
                let out = reconstruct_eulerian(&s, &g, m).unwrap();
                for (a, b) in out[0].iter().zip(&u) {
                    assert!((a - b).abs() < 1e-10, "{m:?} {periodic}");
                }
            }
        }
    }

    #[test]
    fn linear_reproduction() {
        let g = Grid::new_1d(0.0, 1.0, 20, false).unwrap();
        let chi: Vec<f64> = (0..20).map(|j| (j as f64 / 19.0).powf(1.3) * 0.9 + 0.05).collect();
        let u: Vec<f64> = chi.iter().map(|c| 2.0 * c + 1.0).collect();
        let s = state_1d(&g, chi, u);
        let x = g.coords(0);
        let out = reconstruct_eulerian(&s, &g, Method::Linear).unwrap();
        let rbf = reconstruct_eulerian(&s, &g, Method::Rbf).unwrap();
        for k in 0..20 {
            if x[k] >= 0.05 && x[k] <= 0.95 {
                assert!((out[0][k] - (2.0 * x[k] + 1.0)).abs() < 1e-12);
            }
            // merging shifts the leftmost cluster inward
            if x[k] >= 0.1 && x[k] <= 0.95 {
                assert!((rbf[0][k] - (2.0 * x[k] + 1.0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn translated_pulse_within_interpolation_bound() {
        let g = Grid::new_1d(0.0, 2.0, 256, true).unwrap();
        let x = g.coords(0).to_vec();
        let w = 0.1;
        let p = |y: f64| (-((y - 0.6) / w).powi(2)).exp();
        let u: Vec<f64> = x.iter().map(|&y| p(y)).collect();
        let chi: Vec<f64> = x.iter().map(|y| y + 0.2).collect();
        let s = state_1d(&g, chi, u);
        let out = reconstruct_eulerian(&s, &g, Method::Linear).unwrap();
        let dx = g.spacing(0);
        let bound = dx * dx / 8.0 * 2.0 / (w * w);
        for (k, &y) in x.iter().enumerate() {
            assert!((out[0][k] - p(y - 0.2)).abs() <= bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn tangled_rejected_or_sorted() {
        let g = Grid::new_1d(0.0, 1.0, 5, false).unwrap();
        let s = state_1d(&g, vec![0.0, 0.5, 0.25, 0.75, 1.0], vec![0.0, 0.5, 0.25, 0.75, 1.0]);
        assert!(matches!(reconstruct_eulerian(&s, &g, Method::Linear), Err(Error::Tangled { .. })));
        let opts = ReconstructOptions::for_dim(1).with_method(Method::Linear).with_policy(TanglePolicy::Sort);
        let r = reconstruct_with(&s, &g, &opts).unwrap();
        assert!(r.tangled);
        for (a, b) in r.fields[0].iter().zip(g.coords(0).iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn near_coincident_nodes_merged_for_rbf() {
        let g = Grid::new_1d(0.0, 1.0, 11, false).unwrap();
        let mut chi = g.coords(0).to_vec();
        chi[5] = chi[4] + 1e-13;
        let u: Vec<f64> = chi.iter().map(|c| c * c).collect();
        let s = state_1d(&g, chi, u);
        let r = reconstruct_with(&s, &g, &ReconstructOptions::for_dim(1)).unwrap();
        assert_eq!(r.adjusted, 1);
        assert!(r.fields[0].iter().all(|v| v.is_finite() && v.abs() < 2.0));
    }

    #[test]
    fn periodic_seam_continuity() {
        let g = Grid::new_1d(0.0, 2.0, 64, true).unwrap();
        let x = g.coords(0).to_vec();
        let f = |y: f64| (std::f64::consts::PI * y).cos();
        let chi: Vec<f64> = x.iter().map(|y| y + 1.37).collect();
        let u: Vec<f64> = x.iter().map(|&y| f(y)).collect();
        let s = state_1d(&g, chi, u);
        let out = reconstruct_eulerian(&s, &g, Method::Rbf).unwrap();
        for (k, &y) in x.iter().enumerate() {
            assert!((out[0][k] - f(y - 1.37)).abs() < 1e-3);
        }
    }

    #[test]
    fn rbf_rejected_in_2d() {
        let g = Grid::new_2d(0.0, 1.0, 4, true).unwrap();
        let s = LagrangianState::at_rest(g.clone(), vec![vec![0.0; 16]]).unwrap();
        assert!(reconstruct_eulerian(&s, &g, Method::Rbf).is_err());
        let out = reconstruct_eulerian(&s, &g, Method::Linear).unwrap();
        assert_eq!(out[0].len(), 16);
    }
}
