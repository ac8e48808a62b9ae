//! Lagrangian states, augmented (coordinates-then-values) snapshots, and
//! conversion back to the Eulerian grid.

pub mod interp;
pub mod reconstruct;

use ndarray::Array2;

use crate::error::{invalid, Result};
use crate::snapshot::Grid;

pub use interp::{interp_linear, wrap};
pub use reconstruct::{reconstruct_eulerian, reconstruct_with, Method, Reconstruction, ReconstructOptions, TanglePolicy};

/// Relative node-gap tolerance below which a Lagrangian grid counts as tangled.
pub const TANGLE_TOL: f64 = 1e-10;

/// Coordinate channel names for a reference grid of dimension `dim`.
pub fn coordinate_names(dim: usize) -> &'static [&'static str] {
    match dim {
        1 => &["chi"],
        _ => &["chi", "zeta"],
    }
}

/// Channel list of an augmented snapshot: coordinates first, then states.
pub fn augmented_channels(dim: usize, states: &[&str]) -> Vec<String> {
    coordinate_names(dim).iter().chain(states).map(|s| s.to_string()).collect()
}

/// Characteristic coordinates and state values on a reference grid at one `(μ, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    grid: Grid,
    coords: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl LagrangianState {
    pub fn new(grid: Grid, coords: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != grid.dim() {
            return Err(invalid(format!("{} coordinate arrays for a {}D grid", coords.len(), grid.dim())));
        }
        if values.is_empty() {
            return Err(invalid("Lagrangian state without values"));
        }
        let n = grid.len();
        if coords.iter().chain(&values).any(|c| c.len() != n) {
            return Err(invalid("array length does not match the reference grid"));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite characteristic coordinate"));
        }
        Ok(LagrangianState { grid, coords, values })
    }

    /// Undeformed state: coordinates equal to the reference nodes.
    pub fn at_rest(grid: Grid, values: Vec<Vec<f64>>) -> Result<Self> {
        let coords = (0..grid.dim()).map(|a| grid.mesh(a).to_vec()).collect();
        LagrangianState::new(grid, coords, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn chi(&self) -> &[f64] {
        &self.coords[0]
    }

    /// Smallest signed node gap (1D) or normalized cell area (2D); negative means folded.
    pub fn min_gap(&self) -> f64 {
        match self.grid.dim() {
            1 => min_gap_1d(&self.coords[0], &self.grid),
            _ => min_cell_area_2d(&self.coords[0], &self.coords[1], &self.grid),
        }
    }

    pub fn is_tangled(&self) -> bool {
        tangled(self.min_gap(), &self.grid)
    }
}

pub(crate) fn tangled(min_gap: f64, grid: &Grid) -> bool {
    match grid.dim() {
        1 => min_gap < -TANGLE_TOL * grid.spacing(0),
        _ => min_gap < -TANGLE_TOL,
    }
}

/// `min_j (χ_{j+1} − χ_j)`, including the seam `χ_0 + L − χ_{n−1}` when periodic.
pub fn min_gap_1d(chi: &[f64], grid: &Grid) -> f64 {
    let mut g = chi.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if grid.is_periodic(0) {
        g = g.min(chi[0] + grid.length(0) - chi[chi.len() - 1]);
    }
    g
}

/// Minimum over cells and corners of the corner cross product, divided by `ΔxΔy`.
pub fn min_cell_area_2d(chi: &[f64], zeta: &[f64], grid: &Grid) -> f64 {
    let (nx, ny) = (grid.points()[0], grid.points()[1]);
    let (lx, ly) = (grid.length(0), grid.length(1));
    let cx = if grid.is_periodic(0) { nx } else { nx - 1 };
    let cy = if grid.is_periodic(1) { ny } else { ny - 1 };
    let norm = grid.spacing(0) * grid.spacing(1);
    let mut m = f64::INFINITY;
    for i in 0..cx {
        let i1 = (i + 1) % nx;
        let sx = if i + 1 == nx { lx } else { 0.0 };
        for j in 0..cy {
            let j1 = (j + 1) % ny;
            let sy = if j + 1 == ny { ly } else { 0.0 };
            // counter-clockwise corners: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let p = [
                (chi[i * ny + j], zeta[i * ny + j]),
                (chi[i1 * ny + j] + sx, zeta[i1 * ny + j]),
                (chi[i1 * ny + j1] + sx, zeta[i1 * ny + j1] + sy),
                (chi[i * ny + j1], zeta[i * ny + j1] + sy),
            ];
            for k in 0..4 {
                let (a, b, c) = (p[(k + 3) % 4], p[k], p[(k + 1) % 4]);
                let cross = (c.0 - b.0) * (a.1 - b.1) - (c.1 - b.1) * (a.0 - b.0);
                m = m.min(cross / norm);
            }
        }
    }
    m
}

/// Channel-stacked form of a [`LagrangianState`], one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSnapshot {
    pub channels: Array2<f64>,
    pub n_coords: usize,
}

impl AugmentedSnapshot {
    /// Flattened `[coords..., values...]` vector.
    pub fn to_vec(&self) -> Vec<f64> {
        self.channels.iter().copied().collect()
    }

    pub fn from_vec(v: &[f64], n_channels: usize, n_coords: usize) -> Result<Self> {
        if n_channels == 0 || v.len() % n_channels != 0 {
            return Err(invalid("vector length is not a multiple of the channel count"));
        }
        let channels = Array2::from_shape_vec((n_channels, v.len() / n_channels), v.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        Ok(AugmentedSnapshot { channels, n_coords })
    }
}

pub fn stack(state: &LagrangianState) -> AugmentedSnapshot {
    let n = state.grid.len();
    let rows: Vec<&Vec<f64>> = state.coords.iter().chain(&state.values).collect();
    let channels = Array2::from_shape_fn((rows.len(), n), |(c, j)| rows[c][j]);
    AugmentedSnapshot { channels, n_coords: state.coords.len() }
}

pub fn unstack(a: &AugmentedSnapshot, grid: &Grid) -> Result<LagrangianState> {
    let d = grid.dim();
    if a.n_coords != d || a.channels.nrows() <= d {
        return Err(invalid(format!(
            "augmented snapshot with {} channels ({} coordinates) does not fit a {d}D grid",
            a.channels.nrows(),
            a.n_coords
        )));
    }
    if a.channels.ncols() != grid.len() {
        return Err(invalid("augmented snapshot length does not match the grid"));
    }
    let rows: Vec<Vec<f64>> = a.channels.rows().into_iter().map(|r| r.to_vec()).collect();
    let (coords, values) = rows.split_at(d);
    LagrangianState::new(grid.clone(), coords.to_vec(), values.to_vec())
}

/// Wrap coordinates into the domain when periodic; identity otherwise.
pub fn wrap_coordinates(chi: &[f64], domain: (f64, f64), periodic: bool) -> Result<Vec<f64>> {
    let (a, b) = domain;
    if !(b > a) {
        return Err(invalid("domain length must be positive"));
    }
    if !periodic {
        return Ok(chi.to_vec());
    }
    Ok(chi.iter().map(|&x| wrap(x, a, b - a)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn stack_small() {
        let g = Grid::new_1d(0.0, 2.0, 3, false).unwrap();
        let s = LagrangianState::new(g.clone(), vec![vec![0.0, 1.0, 2.0]], vec![vec![5.0, 6.0, 7.0]]).unwrap();
        let a = stack(&s);
        assert_eq!(a.channels, array![[0.0, 1.0, 2.0], [5.0, 6.0, 7.0]]);
        assert_eq!(unstack(&a, &g).unwrap(), s);
        let bad = AugmentedSnapshot { channels: array![[0.0, 1.0, 2.0]], n_coords: 1 };
        assert!(unstack(&bad, &g).is_err());
    }

    #[test]
    fn burgers2d_channel_order() {
        let ch = augmented_channels(2, &["u", "v"]);
        assert_eq!(ch, vec!["chi", "zeta", "u", "v"]);
        let g = Grid::new_2d(0.0, 5.0, 128, true).unwrap();
        let n = g.len();
        let s = LagrangianState::at_rest(g, vec![vec![1.0; n], vec![1.0; n]]).unwrap();
        assert_eq!(stack(&s).channels.dim(), (4, 128 * 128));
    }

    #[test]
    fn wrap_examples() {
        let w = wrap_coordinates(&[2.3, -0.1, 0.7], (0.0, 2.0), true).unwrap();
        assert!((w[0] - 0.3).abs() < 1e-15 && (w[1] - 1.9).abs() < 1e-15 && w[2] == 0.7);
        assert_eq!(wrap_coordinates(&[2.3, -0.1], (0.0, 2.0), false).unwrap(), vec![2.3, -0.1]);
        assert!(wrap_coordinates(&[1.0], (1.0, 1.0), true).is_err());
    }

    #[test]
    fn tangle_detection() {
        let g = Grid::new_1d(0.0, 1.0, 5, false).unwrap();
        let ok = LagrangianState::new(g.clone(), vec![vec![0.0, 0.3, 0.3, 0.8, 1.0]], vec![vec![0.0; 5]]).unwrap();
        assert!(!ok.is_tangled());
        let bad = LagrangianState::new(g, vec![vec![0.0, 0.3, 0.29, 0.8, 1.0]], vec![vec![0.0; 5]]).unwrap();
        assert!(bad.is_tangled());
        let g2 = Grid::new_2d(0.0, 1.0, 6, true).unwrap();
        let rest = LagrangianState::at_rest(g2.clone(), vec![vec![0.0; 36]]).unwrap();
        assert!((rest.min_gap() - 1.0).abs() < 1e-12);
        let mut chi = g2.mesh(0).to_vec();
        chi.swap(7, 13);
        let folded = LagrangianState::new(g2.clone(), vec![chi, g2.mesh(1).to_vec()], vec![vec![0.0; 36]]).unwrap();
        assert!(folded.is_tangled());
    }

    proptest! {
        #[test]
        fn stack_unstack_bijection(vals in prop::collection::vec(-1e6f64..1e6, 24)) {
            let g = Grid::new(vec![(0.0, 1.0), (0.0, 2.0)], vec![3, 4], vec![true, false]).unwrap();
            let s = LagrangianState::new(
                g.clone(),
                vec![vals[..12].to_vec(), vals[12..].to_vec()],
                vec![vals[6..18].to_vec(), vals.iter().rev().take(12).copied().collect()],
            ).unwrap();
            let a = stack(&s);
            prop_assert_eq!(unstack(&a, &g).unwrap(), s);
            let v = a.to_vec();
            prop_assert_eq!(AugmentedSnapshot::from_vec(&v, 4, 2).unwrap(), a);
        }
    }
}
