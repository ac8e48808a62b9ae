//! Parametric DMD: global compression, per-parameter latent operators and
//! RBF interpolation of the evolved latents across parameters.

use ndarray::{s, Array1, Array2, Array4, ArrayView1};

use crate::dmd::{evolve_latent, fit_latent_dmd, one_step_residual};
use crate::error::{invalid, Error, Result};
use crate::lagframe::reconstruct::{reconstruct_with, ReconstructOptions, Reconstruction};
use crate::lagframe::{unstack, AugmentedSnapshot};
use crate::linalg::{self, SIGMA_FLOOR};
use crate::rbf::{RbfSystem, KERNEL_ID};
use crate::snapshot::{Frame, Grid, Normalization, ParamSet, SnapshotSet, TimeAxis};

#[derive(Debug, Clone, PartialEq)]
pub enum CompressorKind {
    /// Leading left singular vectors of the global snapshot matrix.
    Pod { basis: Array2<f64>, sigma: Array1<f64> },
    /// Latents come from, and decoding happens in, an external tool.
    External { source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compressor {
    pub kind: CompressorKind,
    pub rank: usize,
    pub normalization: Option<Normalization>,
}

/// Field layout a model decodes into.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLayout {
    pub frame: Frame,
    pub grid: Grid,
    pub channels: Vec<String>,
}

impl FieldLayout {
    pub fn of(s: &SnapshotSet) -> Result<Self> {
        Ok(FieldLayout { frame: s.frame(), grid: s.field_grid()?.clone(), channels: s.channels().to_vec() })
    }

    pub fn snapshot_len(&self) -> usize {
        self.channels.len() * self.grid.len()
    }
}

impl Compressor {
    /// POD basis of rank `r` from every snapshot of `snaps` (param-major global matrix).
    pub fn fit_pod(snaps: &SnapshotSet, r: usize, normalize: bool) -> Result<Self> {
        if r == 0 {
            return Err(invalid("rank must be at least 1"));
        }
        let normalization = if normalize { Some(Normalization::zscore(snaps)?) } else { None };
        let mut m = snaps.global_matrix();
        if let Some(n) = &normalization {
            let space = snaps.space_len();
            for mut col in m.columns_mut() {
                let mut v = col.to_vec();
                n.apply(&mut v, space);
                col.assign(&Array1::from(v));
            }
        }
        let svd = linalg::svd(m.view())?;
        let achievable = linalg::numerical_rank(&svd.s, SIGMA_FLOOR);
        if achievable < r {
            return Err(Error::RankDeficient { requested: r, achievable });
        }
        let basis = svd.u.slice(s![.., ..r]).to_owned();
        Ok(Compressor { kind: CompressorKind::Pod { basis, sigma: svd.s }, rank: r, normalization })
    }

    /// Leading `r` POD modes of this compressor; POD bases nest, so this equals
    /// a fresh fit at rank `r` on the same data.
    pub fn truncate(&self, r: usize) -> Result<Self> {
        match &self.kind {
            CompressorKind::Pod { basis, sigma } if r >= 1 && r <= self.rank => Ok(Compressor {
                kind: CompressorKind::Pod { basis: basis.slice(s![.., ..r]).to_owned(), sigma: sigma.clone() },
                rank: r,
                normalization: self.normalization.clone(),
            }),
            CompressorKind::Pod { .. } => Err(invalid(format!("cannot truncate rank {} to {r}", self.rank))),
            CompressorKind::External { .. } => Err(invalid("external compressors cannot be truncated")),
        }
    }

    pub fn external(source: impl Into<String>, rank: usize) -> Self {
        Compressor { kind: CompressorKind::External { source: source.into() }, rank, normalization: None }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            CompressorKind::Pod { .. } => "pod",
            CompressorKind::External { .. } => "external",
        }
    }

    fn basis(&self) -> Result<&Array2<f64>> {
        match &self.kind {
            CompressorKind::Pod { basis, .. } => Ok(basis),
            CompressorKind::External { source } => {
                Err(invalid(format!("external compressor ({source}) encodes and decodes outside this crate")))
            }
        }
    }

    /// `Φ_rᵀ` of the (normalized) channel-stacked snapshot.
    pub fn encode(&self, snapshot: ArrayView1<'_, f64>, space: usize) -> Result<Array1<f64>> {
        let basis = self.basis()?;
        if snapshot.len() != basis.nrows() {
            return Err(invalid("snapshot length does not match the basis"));
        }
        let mut v = snapshot.to_vec();
        if let Some(n) = &self.normalization {
            n.apply(&mut v, space);
        }
        Ok(basis.t().dot(&Array1::from(v)))
    }

    /// `Φ_r h`, de-normalized.
    pub fn decode(&self, latent: ArrayView1<'_, f64>, space: usize) -> Result<Array1<f64>> {
        let basis = self.basis()?;
        if latent.len() != self.rank {
            return Err(invalid(format!("latent has length {}, model rank is {}", latent.len(), self.rank)));
        }
        let mut v = basis.dot(&latent).to_vec();
        if let Some(n) = &self.normalization {
            n.invert(&mut v, space);
        }
        Ok(Array1::from(v))
    }

    /// Latent set `[n_param, n_time, r]` of every snapshot.
    pub fn encode_set(&self, snaps: &SnapshotSet) -> Result<SnapshotSet> {
        let (np, nt, r) = (snaps.n_params(), snaps.n_times(), self.rank);
        let mut data = Array4::zeros((np, nt, r, 1));
        for p in 0..np {
            for k in 0..nt {
                let h = self.encode(snaps.snapshot(p, k), snaps.space_len())?;
                data.slice_mut(s![p, k, .., 0]).assign(&h);
            }
        }
        let mut extra = serde_json::Map::new();
        extra.insert("compressor".into(), self.name().into());
        extra.insert("source_frame".into(), snaps.frame().as_str().into());
        Ok(SnapshotSet::new(None, snaps.params().clone(), *snaps.times(), Frame::Latent, latent_channels(r), data)?
            .with_extra(extra))
    }
}

pub fn latent_channels(r: usize) -> Vec<String> {
    (0..r).map(|i| format!("h{i}")).collect()
}

/// Offline product: per-parameter latent operators and their final-instant anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmdModel {
    pub compressor: Compressor,
    pub layout: FieldLayout,
    pub params: ParamSet,
    /// Training time axis; anchors sit at `times.end()`.
    pub times: TimeAxis,
    pub operators: Vec<Array2<f64>>,
    pub anchors: Vec<Array1<f64>>,
    /// One-step fit residual per parameter.
    pub residuals: Vec<f64>,
    pub kernel: String,
}

/// Fit one latent operator per parameter of a latent set `[n_param, n_time, r]`.
pub fn fit_pdmd(latents: &SnapshotSet, compressor: Compressor, layout: FieldLayout) -> Result<PdmdModel> {
    if latents.frame() != Frame::Latent {
        return Err(invalid("pDMD fits latent trajectories"));
    }
    let r = latents.n_channels();
    if r != compressor.rank {
        return Err(invalid(format!("latent width {r} differs from compressor rank {}", compressor.rank)));
    }
    let params = latents.params().clone();
    let mut operators = Vec::with_capacity(params.len());
    let mut anchors = Vec::with_capacity(params.len());
    let mut residuals = Vec::with_capacity(params.len());
    let (mut unstable, mut rho_max) = (0, 0.0f64);
    for p in 0..params.len() {
        let h = latents.flatten_snapshots(p)?;
        let named = |e: Error| e.context(format!("parameter {:?}", params.row(p).to_vec()));
        let a = fit_latent_dmd(h.view()).map_err(named)?;
        let rho = linalg::eig(&a)
            .map(|(l, _)| l.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .unwrap_or(f64::NAN);
        if rho > 1.0 {
            log::debug!("latent operator for parameter {:?} has spectral radius {rho:.6}", params.row(p).to_vec());
            unstable += 1;
            rho_max = rho_max.max(rho);
        }
        residuals.push(one_step_residual(&a, h.view()));
        anchors.push(h.column(h.ncols() - 1).to_owned());
        operators.push(a);
    }
    if unstable > 0 {
        log::warn!("{unstable} of {} latent operators have spectral radius above 1 (max {rho_max:.6})", params.len());
    }
    Ok(PdmdModel {
        compressor,
        layout,
        params,
        times: *latents.times(),
        operators,
        anchors,
        residuals,
        kernel: KERNEL_ID.into(),
    })
}

/// POD compressor plus [`fit_pdmd`] on a field set.
pub fn fit_pdmd_pod(train: &SnapshotSet, r: usize, normalize: bool) -> Result<PdmdModel> {
    let comp = Compressor::fit_pod(train, r, normalize)?;
    let latents = comp.encode_set(train)?;
    fit_pdmd(&latents, comp, FieldLayout::of(train)?)
}

impl PdmdModel {
    pub fn rank(&self) -> usize {
        self.compressor.rank
    }

    /// Latents at `μ*` for steps `1..=steps` past the anchor, one row per step.
    pub fn predict_steps(&self, mu: &[f64], steps: usize) -> Result<Array2<f64>> {
        let np = self.params.len();
        if mu.len() != self.params.dim() {
            return Err(invalid(format!("expected {} parameter values, got {}", self.params.dim(), mu.len())));
        }
        let system = if np > 1 {
            let sys = RbfSystem::new(self.params.values().view())?;
            Some(sys)
        } else {
            None
        };
        if np > 1 && outside_box(self.params.values(), mu) {
            log::warn!("parameter {mu:?} lies outside the training box; RBF extrapolates");
        }
        let r = self.rank();
        let mut out = Array2::zeros((steps, r));
        let mut states: Vec<Array1<f64>> = self.anchors.clone();
        let scales: Vec<f64> = self.anchors.iter().map(|a| linalg::norm2(&a.to_vec())).collect();
        for k in 1..=steps {
            let mut values = Array2::zeros((np, r));
            for i in 0..np {
                let next = evolve_latent(&self.operators[i], states[i].view(), 1, scales[i])
                    .map_err(|e| e.context(format!("parameter {:?}", self.params.row(i).to_vec())))?;
                values.row_mut(i).assign(&next);
                states[i] = next;
            }
            let h = match &system {
                Some(sys) => sys.fit(values.view())?.eval(mu)?,
                None => values.row(0).to_owned(),
            };
            out.row_mut(k - 1).assign(&h);
        }
        Ok(out)
    }

    /// Interpolated latent `k` steps past the anchor.
    pub fn predict(&self, mu: &[f64], k: usize) -> Result<Array1<f64>> {
        if k == 0 {
            let np = self.params.len();
            if np == 1 {
                return Ok(self.anchors[0].clone());
            }
            let mut values = Array2::zeros((np, self.rank()));
            for (i, a) in self.anchors.iter().enumerate() {
                values.row_mut(i).assign(a);
            }
            return RbfSystem::new(self.params.values().view())?.fit(values.view())?.eval(mu);
        }
        let all = self.predict_steps(mu, k)?;
        Ok(all.row(k - 1).to_owned())
    }

    /// Decode a latent into the model's field layout (POD only).
    pub fn decode(&self, latent: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.compressor.decode(latent, self.layout.grid.len())
    }

    /// Decode and map to the Eulerian `target` grid.
    pub fn decode_and_reconstruct(
        &self,
        latent: ArrayView1<'_, f64>,
        target: &Grid,
        opts: &ReconstructOptions,
    ) -> Result<Reconstruction> {
        let v = self.decode(latent)?;
        reconstruct_decoded(&self.layout, v.view(), target, opts)
    }

    /// Eulerian predictions for every row of `mus` over steps `1..=steps`;
    /// the second value counts snapshots whose decoded grid was tangled.
    pub fn predict_fields(
        &self,
        mus: &ParamSet,
        steps: usize,
        target: &Grid,
        opts: &ReconstructOptions,
    ) -> Result<(SnapshotSet, usize)> {
        let states = state_channels(&self.layout);
        let mut data = Array4::zeros((mus.len(), steps, states.len(), target.len()));
        let mut tangled = 0;
        for p in 0..mus.len() {
            let mu = mus.row(p).to_vec();
            let lat = self.predict_steps(&mu, steps)?;
            for k in 0..steps {
                let rec = self
                    .decode_and_reconstruct(lat.row(k), target, opts)
                    .map_err(|e| e.context(format!("parameter {mu:?}, step {}", k + 1)))?;
                tangled += rec.tangled as usize;
                for (c, f) in rec.fields.iter().enumerate() {
                    data.slice_mut(s![p, k, c, ..]).assign(&ArrayView1::from(f.as_slice()));
                }
            }
        }
        let times = TimeAxis::new(self.times.end() + self.times.dt, self.times.dt, steps)?;
        let set = SnapshotSet::new(Some(target.clone()), mus.clone(), times, Frame::Eulerian, states, data)?;
        Ok((set, tangled))
    }
}

/// State channel names of a layout (coordinates dropped).
pub fn state_channels(layout: &FieldLayout) -> Vec<String> {
    match layout.frame {
        Frame::Lagrangian => layout.channels[layout.grid.dim()..].to_vec(),
        _ => layout.channels.clone(),
    }
}

/// Eulerian fields from a decoded channel-stacked vector in `layout`.
pub fn reconstruct_decoded(
    layout: &FieldLayout,
    decoded: ArrayView1<'_, f64>,
    target: &Grid,
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    if decoded.len() != layout.snapshot_len() {
        return Err(invalid("decoded vector does not match the field layout"));
    }
    let space = layout.grid.len();
    match layout.frame {
        Frame::Eulerian => {
            if target != &layout.grid {
                return Err(invalid("Eulerian models reconstruct on their own grid only"));
            }
            let fields = (0..layout.channels.len()).map(|c| decoded.slice(s![c * space..(c + 1) * space]).to_vec()).collect();
            Ok(Reconstruction { fields, tangled: false, min_gap: f64::NAN, adjusted: 0 })
        }
        Frame::Lagrangian => {
            let n = layout.channels.len();
            let aug = AugmentedSnapshot::from_vec(decoded.as_slice().unwrap_or(&decoded.to_vec()), n, layout.grid.dim())?;
            let state = unstack(&aug, &layout.grid)?;
            reconstruct_with(&state, target, opts)
        }
        Frame::Latent => Err(invalid("latent layouts cannot be reconstructed")),
    }
}

/// Eulerian version of a field set on `target`, plus the number of tangled snapshots.
pub fn reconstruct_set(s: &SnapshotSet, target: &Grid, opts: &ReconstructOptions) -> Result<(SnapshotSet, usize)> {
    let layout = FieldLayout::of(s)?;
    let states = state_channels(&layout);
    let mut data = Array4::zeros((s.n_params(), s.n_times(), states.len(), target.len()));
    let mut tangled = 0;
    for p in 0..s.n_params() {
        for k in 0..s.n_times() {
            let rec = reconstruct_decoded(&layout, s.snapshot(p, k), target, opts)
                .map_err(|e| e.context(format!("parameter {}, snapshot {k}", p)))?;
            tangled += rec.tangled as usize;
            for (c, f) in rec.fields.iter().enumerate() {
                data.slice_mut(s![p, k, c, ..]).assign(&ArrayView1::from(f.as_slice()));
            }
        }
    }
    let set = SnapshotSet::new(Some(target.clone()), s.params().clone(), *s.times(), Frame::Eulerian, states, data)?;
    Ok((set, tangled))
}

fn outside_box(nodes: &Array2<f64>, x: &[f64]) -> bool {
    nodes.columns().into_iter().zip(x).any(|(col, &v)| {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v < lo - 1e-12 * (hi - lo).max(1.0) || v > hi + 1e-12 * (hi - lo).max(1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagframe::reconstruct::{Method, TanglePolicy};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new_1d(0.0, 1.0, 16, false).unwrap()
    }

    /// Random linear dynamics in a fixed 3-dimensional subspace, one trajectory per parameter.
    fn synthetic(frame: Frame, mus: &[f64]) -> SnapshotSet {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = linalg::svd(Array2::from_shape_fn((32, 3), |_| rng.random_range(-1.0..1.0)).view()).unwrap().u;
        let nt = 12;
        let channels: Vec<String> = match frame {
            Frame::Lagrangian => vec!["chi".into(), "u".into()],
            _ => vec!["a".into(), "b".into()],
        };
        let mut data = Array4::zeros((mus.len(), nt, 2, 16));
        for (p, &mu) in mus.iter().enumerate() {
            let a = array![[0.95, 0.1 * mu, 0.0], [-0.1 * mu, 0.95, 0.0], [0.0, 0.0, 0.9]];
            let mut h = array![1.0, 0.5, -0.5];
            for k in 0..nt {
                let mut v = q.slice(s![.., ..3]).dot(&h);
                if frame == Frame::Lagrangian {
                    // keep chi monotone: add the rest grid
                    for j in 0..16 {
                        v[j] = 0.01 * v[j] + g.node(0, j);
                    }
                }
                data.slice_mut(s![p, k, .., ..]).assign(&v.into_shape_with_order((2, 16)).unwrap());
                h = a.dot(&h);
            }
        }
        SnapshotSet::new(Some(g), ParamSet::scalar("mu", mus).unwrap(), TimeAxis::new(0.0, 0.1, nt).unwrap(), frame, channels, data)
            .unwrap()
    }

    #[test]
    fn equal_snapshots_give_rank_one_basis() {
        let g = grid();
        let v: Vec<f64> = (0..16).map(|j| 1.0 + j as f64).collect();
        let data = Array4::from_shape_fn((2, 3, 1, 16), |(_, _, _, j)| v[j]);
        let s = SnapshotSet::new(Some(g), ParamSet::scalar("mu", &[0.0, 1.0]).unwrap(), TimeAxis::new(0.0, 1.0, 3).unwrap(), Frame::Eulerian, vec!["u".into()], data).unwrap();
        let c = Compressor::fit_pod(&s, 1, false).unwrap();
        let CompressorKind::Pod { basis, sigma } = &c.kind else { unreachable!() };
        assert!(sigma[1] / sigma[0] < 1e-12);
        let nrm = linalg::norm2(&v);
        for j in 0..16 {
            assert!((basis[[j, 0]].abs() - v[j] / nrm).abs() < 1e-12);
        }
        assert!(matches!(Compressor::fit_pod(&s, 2, false), Err(Error::RankDeficient { requested: 2, achievable: 1 })));
    }

    #[test]
    fn frame_symmetry_identical_latents() {
        let mus = [0.0, 0.5, 1.0];
        let e = synthetic(Frame::Eulerian, &mus);
        // same numbers relabelled as a Lagrangian set
        let l = SnapshotSet::new(e.grid().cloned(), e.params().clone(), *e.times(), Frame::Lagrangian, vec!["chi".into(), "u".into()], e.data().clone()).unwrap();
        let me = fit_pdmd_pod(&e, 3, false).unwrap();
        let ml = fit_pdmd_pod(&l, 3, false).unwrap();
        assert_eq!(me.operators, ml.operators);
        assert_eq!(me.predict(&[0.3], 4).unwrap(), ml.predict(&[0.3], 4).unwrap());
    }

    #[test]
    fn training_parameter_reproduced_and_single_parameter_is_plain_dmd() {
        let mus = [0.0, 0.5, 1.0];
        let s = synthetic(Frame::Eulerian, &mus);
        let m = fit_pdmd_pod(&s, 3, false).unwrap();
        assert!(m.residuals.iter().all(|&r| r < 1e-10));
        for (i, &mu) in mus.iter().enumerate() {
            let h = m.predict(&[mu], 5).unwrap();
            let direct = evolve_latent(&m.operators[i], m.anchors[i].view(), 5, 1.0).unwrap();
            for (a, b) in h.iter().zip(direct.iter()) {
                assert!((a - b).abs() <= 1e-8 * direct.iter().map(|v| v.abs()).fold(0.0, f64::max));
            }
        }
        let one = s.subset_params(&[1]).unwrap();
        let m1 = fit_pdmd_pod(&one, 3, false).unwrap();
        let h = m1.predict(&[0.7], 3).unwrap();
        let direct = evolve_latent(&m1.operators[0], m1.anchors[0].view(), 3, 1.0).unwrap();
        assert_eq!(h, direct);
    }

    #[test]
    fn projector_identity_on_training_snapshot() {
        let s = synthetic(Frame::Eulerian, &[0.0, 1.0]);
        let m = fit_pdmd_pod(&s, 2, false).unwrap();
        let snap = s.snapshot(1, 4);
        let h = m.compressor.encode(snap, 16).unwrap();
        let rec = m.decode_and_reconstruct(h.view(), &grid(), &ReconstructOptions::for_dim(1)).unwrap();
        let CompressorKind::Pod { basis, .. } = &m.compressor.kind else { unreachable!() };
        let proj = basis.dot(&basis.t().dot(&snap));
        for c in 0..2 {
            for j in 0..16 {
                assert!((rec.fields[c][j] - proj[c * 16 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_latent_decodes_to_channel_means() {
        let s = synthetic(Frame::Eulerian, &[0.0, 1.0]);
        let c = Compressor::fit_pod(&s, 2, true).unwrap();
        let norm = c.normalization.clone().unwrap();
        let v = c.decode(Array1::zeros(2).view(), 16).unwrap();
        for (ch, aff) in norm.channels.iter().enumerate() {
            assert!(v.slice(s![ch * 16..(ch + 1) * 16]).iter().all(|&x| (x - aff.shift).abs() < 1e-12));
        }
    }

    #[test]
    fn lagrangian_pipeline_reconstructs() {
        let s = synthetic(Frame::Lagrangian, &[0.0, 0.5, 1.0]);
        let m = fit_pdmd_pod(&s, 3, false).unwrap();
        let opts = ReconstructOptions::for_dim(1).with_method(Method::Linear).with_policy(TanglePolicy::Sort);
        let (fields, tangled) = m.predict_fields(&ParamSet::scalar("mu", &[0.25, 0.75]).unwrap(), 3, &grid(), &opts).unwrap();
        assert_eq!(fields.shape(), vec![2, 3, 1, 16]);
        assert_eq!(tangled, 0);
        assert!((fields.times().t0 - 1.2).abs() < 1e-12);
    }

    #[test]
    fn external_compressor_refuses_local_decode() {
        let s = synthetic(Frame::Eulerian, &[0.0, 1.0]);
        let pod = Compressor::fit_pod(&s, 3, false).unwrap();
        let lat = pod.encode_set(&s).unwrap();
        let m = fit_pdmd(&lat, Compressor::external("latents.lrom", 3), FieldLayout::of(&s).unwrap()).unwrap();
        assert!(m.predict(&[0.5], 2).is_ok());
        assert!(m.decode(Array1::zeros(3).view()).is_err());
        assert!(fit_pdmd(&lat, Compressor::external("x", 4), FieldLayout::of(&s).unwrap()).is_err());
    }
}
