//! Grids, parameter sets, time axes and the snapshot tensor every other
//! module reads from.
//!
//! A [`SnapshotSet`] stores field values indexed `[param, time, channel, space]`
//! where the space index is the row-major flattening of the grid (in 2D the
//! `y` index varies fastest). Latent sets have no grid: each latent
//! coordinate is a channel and the space extent is one.

use ndarray::{s, Array1, Array2, Array4, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform tensor-product grid in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    bounds: Vec<(f64, f64)>,
    points: Vec<usize>,
    periodic: Vec<bool>,
}

impl Grid {
    pub fn new(bounds: Vec<(f64, f64)>, points: Vec<usize>, periodic: Vec<bool>) -> Result<Self> {
        let dim = bounds.len();
        if dim == 0 || dim > 2 {
            return Err(invalid(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if points.len() != dim || periodic.len() != dim {
            return Err(invalid("grid bounds, points and periodic flags disagree in length"));
        }
        for (axis, (&(a, b), &n)) in bounds.iter().zip(&points).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(invalid(format!("axis {axis}: bounds [{a}, {b}] are not an interval")));
            }
            if n < 3 {
                return Err(invalid(format!("axis {axis}: need at least 3 points, got {n}")));
            }
        }
        Ok(Grid { bounds, points, periodic })
    }

    pub fn new_1d(a: f64, b: f64, n: usize, periodic: bool) -> Result<Self> {
        Grid::new(vec![(a, b)], vec![n], vec![periodic])
    }

    /// Square-cell 2D grid with the same bounds, resolution and periodicity on both axes.
    pub fn new_2d(a: f64, b: f64, n: usize, periodic: bool) -> Result<Self> {
        Grid::new(vec![(a, b); 2], vec![n; 2], vec![periodic; 2])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (a, b) = self.bounds[axis];
        b - a
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.points[axis];
        if self.periodic[axis] {
            self.length(axis) / n as f64
        } else {
            self.length(axis) / (n - 1) as f64
        }
    }

    /// Coordinate of node `j` on `axis`: `a + j * dx`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        self.bounds[axis].0 + j as f64 * self.spacing(axis)
    }

    pub fn coords(&self, axis: usize) -> Array1<f64> {
        (0..self.points[axis]).map(|j| self.node(axis, j)).collect()
    }

    /// Node coordinates of every grid point along `axis`, in flattened order.
    pub fn mesh(&self, axis: usize) -> Array1<f64> {
        match self.dim() {
            1 => self.coords(0),
            _ => {
                let (nx, ny) = (self.points[0], self.points[1]);
                let mut out = Array1::zeros(nx * ny);
                for i in 0..nx {
                    for j in 0..ny {
                        out[i * ny + j] = if axis == 0 { self.node(0, i) } else { self.node(1, j) };
                    }
                }
                out
            }
        }
    }
}

/// Named parameter samples, one row per parameter instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Array2<f64>,
}

impl ParamSet {
    pub fn new(names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(invalid("parameter set is empty"));
        }
        if values.ncols() != names.len() {
            return Err(invalid(format!(
                "{} parameter names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite parameter value"));
        }
        for i in 0..values.nrows() {
            for k in 0..i {
                if values.row(i) == values.row(k) {
                    return Err(invalid(format!("duplicate parameter rows {k} and {i}")));
                }
            }
        }
        Ok(ParamSet { names, values })
    }

    /// Single named scalar parameter taking each of `values`.
    pub fn scalar(name: &str, values: &[f64]) -> Result<Self> {
        let arr = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| invalid(e.to_string()))?;
        ParamSet::new(vec![name.to_string()], arr)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Keep only the rows listed in `rows`, in that order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        for &r in rows {
            if r >= self.len() {
                return Err(Error::IndexOutOfRange { index: r, len: self.len() });
            }
        }
        ParamSet::new(self.names.clone(), self.values.select(Axis(0), rows))
    }
}

/// Uniform time axis; instant `k` is `t0 + k * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeAxis {
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite() && t0.is_finite()) {
            return Err(invalid(format!("time axis needs finite t0 and dt > 0 (t0={t0}, dt={dt})")));
        }
        if count == 0 {
            return Err(invalid("time axis is empty"));
        }
        Ok(TimeAxis { t0, dt, count })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.count - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.time(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Eulerian,
    Lagrangian,
    Latent,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Eulerian => "eulerian",
            Frame::Lagrangian => "lagrangian",
            Frame::Latent => "latent",
        }
    }
}

impl std::str::FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eulerian" => Ok(Frame::Eulerian),
            "lagrangian" => Ok(Frame::Lagrangian),
            "latent" => Ok(Frame::Latent),
            other => Err(invalid(format!("unknown frame '{other}'"))),
        }
    }
}

/// Per-channel affine map; stored values are `(raw - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAffine {
    pub name: String,
    pub shift: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub channels: Vec<ChannelAffine>,
}

impl Normalization {
    pub fn validate(&self) -> Result<()> {
        for c in &self.channels {
            if !(c.scale != 0.0 && c.scale.is_finite() && c.shift.is_finite()) {
                return Err(invalid(format!("channel '{}' has a non-invertible affine", c.name)));
            }
        }
        Ok(())
    }

    /// z-score per channel over every parameter, time and node of `s`.
    pub fn zscore(s: &SnapshotSet) -> Result<Self> {
        let mut channels = Vec::with_capacity(s.n_channels());
        for (c, name) in s.channels().iter().enumerate() {
            let view = s.data().slice(s![.., .., c, ..]);
            let n = view.len() as f64;
            let mean = view.sum() / n;
            let var = view.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            channels.push(ChannelAffine { name: name.clone(), shift: mean, scale });
        }
        let norm = Normalization { channels };
        norm.validate()?;
        Ok(norm)
    }

    /// Apply to a channel-stacked vector with `space` nodes per channel.
    pub fn apply(&self, v: &mut [f64], space: usize) {
        for (c, aff) in self.channels.iter().enumerate() {
            for x in &mut v[c * space..(c + 1) * space] {
                *x = (*x - aff.shift) / aff.scale;
            }
        }
    }

    pub fn invert(&self, v: &mut [f64], space: usize) {
        for (c, aff) in self.channels.iter().enumerate() {
            for x in &mut v[c * space..(c + 1) * space] {
                *x = *x * aff.scale + aff.shift;
            }
        }
    }
}

/// Immutable `[param, time, channel, space]` tensor with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    grid: Option<Grid>,
    params: ParamSet,
    times: TimeAxis,
    frame: Frame,
    channels: Vec<String>,
    data: Array4<f64>,
    normalization: Option<Normalization>,
    extra: serde_json::Map<String, serde_json::Value>,
}

impl SnapshotSet {
    /// `grid` must be `Some` for field frames and `None` for latent sets.
    pub fn new(
        grid: Option<Grid>,
        params: ParamSet,
        times: TimeAxis,
        frame: Frame,
        channels: Vec<String>,
        data: Array4<f64>,
    ) -> Result<Self> {
        match (&grid, frame) {
            (None, Frame::Latent) | (Some(_), Frame::Eulerian | Frame::Lagrangian) => {}
            (Some(_), Frame::Latent) => return Err(invalid("latent snapshot sets carry no grid")),
            (None, _) => return Err(invalid("field snapshot sets need a grid")),
        }
        let space = grid.as_ref().map_or(1, Grid::len);
        let expected = (params.len(), times.count, channels.len(), space);
        if data.dim() != expected {
            return Err(invalid(format!(
                "tensor shape {:?} does not match metadata {:?}",
                data.dim(),
                expected
            )));
        }
        if channels.is_empty() {
            return Err(invalid("no channels"));
        }
        if let Some((idx, _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("non-finite entry at {idx:?}")));
        }
        let data = if data.is_standard_layout() { data } else { data.as_standard_layout().to_owned() };
        Ok(SnapshotSet {
            grid,
            params,
            times,
            frame,
            channels,
            data,
            normalization: None,
            extra: serde_json::Map::new(),
        })
    }

    pub fn with_normalization(mut self, normalization: Option<Normalization>) -> Result<Self> {
        if let Some(n) = &normalization {
            n.validate()?;
            if n.channels.len() != self.channels.len() {
                return Err(invalid("normalization record does not cover every channel"));
            }
        }
        self.normalization = normalization;
        Ok(self)
    }

    pub fn with_extra(mut self, extra: serde_json::Map<String, serde_json::Value>) -> Self {
        self.extra = extra;
        self
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    /// Grid of a field set; errors on latent sets.
    pub fn field_grid(&self) -> Result<&Grid> {
        self.grid.as_ref().ok_or_else(|| invalid("latent snapshot set has no grid"))
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn times(&self) -> &TimeAxis {
        &self.times
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.count
    }

    /// Nodes per channel (1 for latent sets).
    pub fn space_len(&self) -> usize {
        self.data.dim().3
    }

    /// Length of one channel-stacked snapshot vector.
    pub fn snapshot_len(&self) -> usize {
        self.n_channels() * self.space_len()
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    pub fn extra(&self) -> &serde_json::Map<String, serde_json::Value> {
        &self.extra
    }

    /// Full tensor shape as written to containers: `[param, time, channel, space...]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut shape = vec![self.n_params(), self.n_times(), self.n_channels()];
        if let Some(g) = &self.grid {
            shape.extend_from_slice(g.points());
        }
        shape
    }

    /// Channel-stacked snapshot `(param, time)` as a `channels * space` view.
    pub fn snapshot(&self, param: usize, time: usize) -> ArrayView1<'_, f64> {
        let view: ArrayView2<'_, f64> = self.data.slice(s![param, time, .., ..]);
        let n = view.len();
        view.into_shape_with_order(n).expect("standard layout")
    }

    pub fn channel(&self, param: usize, time: usize, channel: usize) -> ArrayView1<'_, f64> {
        self.data.slice(s![param, time, channel, ..])
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    /// Snapshots of one parameter as columns: `(channels * space) x n_time`.
    pub fn flatten_snapshots(&self, param_index: usize) -> Result<Array2<f64>> {
        if param_index >= self.n_params() {
            return Err(Error::IndexOutOfRange { index: param_index, len: self.n_params() });
        }
        let nt = self.n_times();
        let len = self.snapshot_len();
        let mut out = Array2::zeros((len, nt));
        for k in 0..nt {
            out.column_mut(k).assign(&self.snapshot(param_index, k));
        }
        Ok(out)
    }

    /// Every snapshot of every parameter, param-major: `(channels * space) x (n_param * n_time)`.
    pub fn global_matrix(&self) -> Array2<f64> {
        let nt = self.n_times();
        let mut out = Array2::zeros((self.snapshot_len(), self.n_params() * nt));
        for p in 0..self.n_params() {
            for k in 0..nt {
                out.column_mut(p * nt + k).assign(&self.snapshot(p, k));
            }
        }
        out
    }

    /// Inverse of [`flatten_snapshots`](Self::flatten_snapshots) for one parameter.
    pub fn unflatten(&self, matrix: &Array2<f64>) -> Result<Array4<f64>> {
        if matrix.nrows() != self.snapshot_len() {
            return Err(invalid("row count does not match snapshot length"));
        }
        let nt = matrix.ncols();
        let mut out = Array4::zeros((1, nt, self.n_channels(), self.space_len()));
        for k in 0..nt {
            let col = matrix.column(k);
            for c in 0..self.n_channels() {
                let sl = self.space_len();
                out.slice_mut(s![0, k, c, ..]).assign(&col.slice(s![c * sl..(c + 1) * sl]));
            }
        }
        Ok(out)
    }

    /// Copy of time instants `k0..=k1`, re-anchored at `t0 + k0 * dt`.
    pub fn subset_time(&self, k0: usize, k1: usize) -> Result<SnapshotSet> {
        if k0 > k1 || k1 >= self.n_times() {
            return Err(invalid(format!(
                "invalid time range {k0}..={k1} for {} instants",
                self.n_times()
            )));
        }
        let times = TimeAxis::new(self.times.time(k0), self.times.dt, k1 - k0 + 1)?;
        let data = self.data.slice(s![.., k0..=k1, .., ..]).to_owned();
        let mut out = SnapshotSet::new(
            self.grid.clone(),
            self.params.clone(),
            times,
            self.frame,
            self.channels.clone(),
            data,
        )?;
        out.normalization = self.normalization.clone();
        out.extra = self.extra.clone();
        Ok(out)
    }

    /// Copy restricted to the listed parameter rows.
    pub fn subset_params(&self, rows: &[usize]) -> Result<SnapshotSet> {
        let params = self.params.select(rows)?;
        let data = self.data.select(Axis(0), rows);
        let mut out = SnapshotSet::new(
            self.grid.clone(),
            params,
            self.times,
            self.frame,
            self.channels.clone(),
            data,
        )?;
        out.normalization = self.normalization.clone();
        out.extra = self.extra.clone();
        Ok(out)
    }

    /// Concatenate parameter blocks that share grid, times, frame and channels.
    pub fn concat_params(sets: &[SnapshotSet]) -> Result<SnapshotSet> {
        let first = sets.first().ok_or_else(|| invalid("nothing to concatenate"))?;
        let mut rows = Vec::new();
        for s in sets {
            if s.grid != first.grid
                || s.times != first.times
                || s.frame != first.frame
                || s.channels != first.channels
                || s.params.names() != first.params.names()
            {
                return Err(invalid("snapshot sets are not compatible for concatenation"));
            }
            rows.extend(s.params.values().rows().into_iter().map(|r| r.to_owned()));
        }
        let d = first.params.dim();
        let mut values = Array2::zeros((rows.len(), d));
        for (i, r) in rows.iter().enumerate() {
            values.row_mut(i).assign(r);
        }
        let params = ParamSet::new(first.params.names().to_vec(), values)?;
        let views: Vec<_> = sets.iter().map(|s| s.data.view()).collect();
        let data = ndarray::concatenate(Axis(0), &views).map_err(|e| invalid(e.to_string()))?;
        SnapshotSet::new(
            first.grid.clone(),
            params,
            first.times,
            first.frame,
            first.channels.clone(),
            data,
        )
    }
}
