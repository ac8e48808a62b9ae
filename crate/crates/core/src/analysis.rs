//! Coherence, relative L² error, singular-value decay and n-width proxies.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{invalid, Result};
use crate::linalg;
use crate::snapshot::{Frame, ParamSet, SnapshotSet, TimeAxis};

/// Relative threshold for numerical rank of snapshot spectra.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSeries {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub frame: Frame,
}

impl CoherenceSeries {
    pub fn min(&self) -> f64 {
        self.gamma.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `γ(t) = max_s |⟨w(t), w(s)⟩| / (‖w(t)‖ ‖w(s)‖)` over every training snapshot `s`.
/// `eval` must hold a single parameter; its times label the series.
pub fn coherence(train: &SnapshotSet, eval: &SnapshotSet) -> Result<CoherenceSeries> {
    if train.snapshot_len() != eval.snapshot_len() || train.channels() != eval.channels() {
        return Err(invalid("training and evaluation snapshots differ in layout"));
    }
    if eval.n_params() != 1 {
        return Err(invalid("coherence is evaluated along one parameter's trajectory"));
    }
    let unit = |v: ndarray::ArrayView1<'_, f64>| -> Result<Array1<f64>> {
        let n = linalg::norm2(&v.to_vec());
        if n == 0.0 {
            return Err(invalid("zero-norm snapshot in coherence"));
        }
        Ok(v.mapv(|x| x / n))
    };
    let mut basis = Vec::with_capacity(train.n_params() * train.n_times());
    for p in 0..train.n_params() {
        for k in 0..train.n_times() {
            basis.push(unit(train.snapshot(p, k))?);
        }
    }
    let mut gamma = Vec::with_capacity(eval.n_times());
    for k in 0..eval.n_times() {
        let w = unit(eval.snapshot(0, k))?;
        let g = basis.iter().map(|b| b.dot(&w).abs()).fold(0.0, f64::max);
        gamma.push(g.min(1.0));
    }
    Ok(CoherenceSeries { times: eval.times().times(), gamma, frame: eval.frame() })
}

/// Per-(parameter, time) relative errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub params: ParamSet,
    pub times: TimeAxis,
    /// `n_param x n_time`.
    pub errors: Array2<f64>,
}

impl ErrorTable {
    pub fn mean(&self) -> f64 {
        self.errors.mean().unwrap_or(f64::NAN)
    }

    /// Mean over time for each parameter.
    pub fn per_param(&self) -> Vec<f64> {
        self.errors.rows().into_iter().map(|r| r.mean().unwrap_or(f64::NAN)).collect()
    }

    /// Mean over parameters for each time.
    pub fn per_time(&self) -> Vec<f64> {
        self.errors.columns().into_iter().map(|c| c.mean().unwrap_or(f64::NAN)).collect()
    }
}

/// `‖u − û‖₂ / ‖u‖₂` per snapshot; the table mean is the averaged error.
pub fn relative_l2_error(truth: &SnapshotSet, pred: &SnapshotSet) -> Result<ErrorTable> {
    if truth.data().dim() != pred.data().dim() {
        return Err(invalid(format!("shape mismatch: truth {:?}, prediction {:?}", truth.shape(), pred.shape())));
    }
    let (np, nt) = (truth.n_params(), truth.n_times());
    let mut errors = Array2::zeros((np, nt));
    for p in 0..np {
        for k in 0..nt {
            let (u, v) = (truth.snapshot(p, k), pred.snapshot(p, k));
            let den = u.dot(&u).sqrt();
            if den == 0.0 {
                return Err(invalid(format!("zero-norm truth snapshot at parameter {p}, time {k}")));
            }
            let num = u.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            errors[[p, k]] = num / den;
        }
    }
    Ok(ErrorTable { params: truth.params().clone(), times: *truth.times(), errors })
}

/// Singular values of the global snapshot matrix divided by `σ_1`.
pub fn singular_value_decay(snaps: &SnapshotSet) -> Result<Array1<f64>> {
    normalized_spectrum(snaps.global_matrix().view())
}

pub fn normalized_spectrum(m: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    let s = linalg::singular_values(m)?;
    let s1 = s.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return Ok(s);
    }
    Ok(s.mapv(|v| v / s1))
}

pub fn numerical_rank(snaps: &SnapshotSet) -> Result<usize> {
    let s = linalg::singular_values(snaps.global_matrix().view())?;
    Ok(linalg::numerical_rank(&s, RANK_TOL))
}

/// Worst-sample POD projection error by subspace dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NWidthCurve {
    pub n: Vec<usize>,
    pub d_hat: Vec<f64>,
}

impl NWidthCurve {
    pub fn d0(&self) -> f64 {
        self.d_hat[0]
    }

    pub fn normalized(&self) -> Vec<f64> {
        let d0 = self.d0();
        self.d_hat.iter().map(|d| if d0 > 0.0 { d / d0 } else { 0.0 }).collect()
    }
}

/// `d̂_n = max_j ‖(I − P_n) m_j‖` for `n = 0..=n_max`, with `P_n` the leading-n POD projector of the columns.
pub fn nwidth_proxy_matrix(m: ArrayView2<'_, f64>, n_max: usize) -> Result<NWidthCurve> {
    let (rows, cols) = m.dim();
    if n_max > cols {
        return Err(invalid(format!("n_max {n_max} exceeds the {cols} samples")));
    }
    let svd = linalg::svd(m)?;
    let k = svd.s.len().min(rows).min(cols);
    // energy of each sample in each singular direction: (σ_i v_ij)²
    let mut contrib = Array2::<f64>::zeros((k, cols));
    for i in 0..k {
        for j in 0..cols {
            contrib[[i, j]] = (svd.s[i] * svd.vt[[i, j]]).powi(2);
        }
    }
    // suffix sums avoid cancellation in ‖m_j‖² − Σ_{i≤n} (σ_i v_ij)²
    let mut suffix = Array2::<f64>::zeros((k + 1, cols));
    for i in (0..k).rev() {
        for j in 0..cols {
            suffix[[i, j]] = suffix[[i + 1, j]] + contrib[[i, j]];
        }
    }
    let col_norms: Vec<f64> = m.columns().into_iter().map(|c| c.dot(&c)).collect();
    let mut d_hat = Vec::with_capacity(n_max + 1);
    d_hat.push(col_norms.iter().copied().fold(0.0, f64::max).sqrt());
    for n in 1..=n_max {
        let worst = suffix.row(n.min(k)).iter().copied().fold(0.0, f64::max).sqrt();
        let prev = *d_hat.last().expect("nonempty");
        d_hat.push(worst.min(prev));
    }
    Ok(NWidthCurve { n: (0..=n_max).collect(), d_hat })
}

pub fn nwidth_proxy(snaps: &SnapshotSet, n_max: usize) -> Result<NWidthCurve> {
    nwidth_proxy_matrix(snaps.global_matrix().view(), n_max)
}
