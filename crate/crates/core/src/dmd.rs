//! Single-parameter dynamic mode decomposition.

use std::sync::OnceLock;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::c64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Svd, SIGMA_FLOOR};
use crate::snapshot::{Frame, TimeAxis};

/// Relative cutoff of the pseudo-inverse in latent operator fits.
pub const LATENT_RCOND: f64 = 1e-10;

/// Growth factor beyond which a prediction is declared divergent.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Array1<c64>,
    /// Right eigenvectors as columns.
    pub vectors: Array2<c64>,
    pub inverse: Array2<c64>,
}

/// Rank-r DMD operator with its POD basis.
#[derive(Debug)]
pub struct ReducedOperator {
    basis: Array2<f64>,
    atilde: Array2<f64>,
    sigma: Array1<f64>,
    energy: f64,
    degenerate: bool,
    pub frame: Option<Frame>,
    pub param: Option<Vec<f64>>,
    eigen: OnceLock<std::result::Result<Eigen, String>>,
}

impl Clone for ReducedOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        ReducedOperator {
            basis: self.basis.clone(),
            atilde: self.atilde.clone(),
            sigma: self.sigma.clone(),
            energy: self.energy,
            degenerate: self.degenerate,
            frame: self.frame,
            param: self.param.clone(),
            eigen,
        }
    }
}

/// Fit `Ã = Φᵀ U⁺ V Σ⁻¹` from the rank-`r` SVD of `U⁻` (all but the last column).
pub fn fit_dmd(snapshots: ArrayView2<'_, f64>, r: usize) -> Result<ReducedOperator> {
    let m = snapshots.ncols().saturating_sub(1);
    if r == 0 {
        return Err(invalid("rank must be at least 1"));
    }
    if m < r {
        return Err(invalid(format!("{} snapshots cannot support rank {r}", m + 1)));
    }
    let u_minus = snapshots.slice(s![.., ..m]);
    let u_plus = snapshots.slice(s![.., 1..]);
    let Svd { u, s: sig, vt } = linalg::svd(u_minus)?;
    let achievable = linalg::numerical_rank(&sig, SIGMA_FLOOR);
    if achievable < r {
        return Err(Error::RankDeficient { requested: r, achievable });
    }
    let degenerate = sig.len() > r && (sig[r - 1] - sig[r]) <= SIGMA_FLOOR * sig[0];
    let total: f64 = sig.iter().map(|v| v * v).sum();
    let energy = sig.iter().take(r).map(|v| v * v).sum::<f64>() / total;
    let phi = u.slice(s![.., ..r]).to_owned();
    let mut v = vt.slice(s![..r, ..]).t().to_owned();
    for (mut col, &sv) in v.columns_mut().into_iter().zip(sig.iter()) {
        col /= sv;
    }
    let atilde = phi.t().dot(&u_plus).dot(&v);
    Ok(ReducedOperator {
        basis: phi,
        atilde,
        sigma: sig.slice(s![..r]).to_owned(),
        energy,
        degenerate,
        frame: None,
        param: None,
        eigen: OnceLock::new(),
    })
}

impl ReducedOperator {
    /// Build from an explicit basis and operator (no SVD provenance).
    pub fn from_parts(basis: Array2<f64>, atilde: Array2<f64>, sigma: Array1<f64>) -> Result<Self> {
        let r = atilde.nrows();
        if atilde.ncols() != r || basis.ncols() != r || sigma.len() != r {
            return Err(invalid("basis, operator and singular values disagree in rank"));
        }
        Ok(ReducedOperator {
            basis,
            atilde,
            sigma,
            energy: f64::NAN,
            degenerate: false,
            frame: None,
            param: None,
            eigen: OnceLock::new(),
        })
    }

    pub fn with_provenance(mut self, frame: Frame, param: Vec<f64>) -> Self {
        self.frame = Some(frame);
        self.param = Some(param);
        self
    }

    pub fn rank(&self) -> usize {
        self.atilde.nrows()
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn operator(&self) -> &Array2<f64> {
        &self.atilde
    }

    pub fn singular_values(&self) -> &Array1<f64> {
        &self.sigma
    }

    /// Fraction of snapshot energy `Σ_{i≤r} σ_i² / Σ_i σ_i²` captured by the basis.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// True when `σ_r` and `σ_{r+1}` coincide within the floor, so the basis is not unique.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Eigen-data of `Ã`, computed on first use.
    pub fn eigen(&self) -> Result<&Eigen> {
        let e = self.eigen.get_or_init(|| {
            let (values, vectors) = linalg::eig(&self.atilde).map_err(|e| e.to_string())?;
            let inverse = linalg::inv_complex(&vectors).map_err(|e| e.to_string())?;
            Ok(Eigen { values, vectors, inverse })
        });
        e.as_ref().map_err(|m| Error::Linalg(m.clone()))
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.eigen()?.values.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// `Φ Ã^k Φᵀ u_n` by repeated real products.
    pub fn predict(&self, u_n: ArrayView1<'_, f64>, k: usize) -> Result<Array1<f64>> {
        if u_n.len() != self.basis.nrows() {
            return Err(invalid("state length does not match the basis"));
        }
        let h = self.basis.t().dot(&u_n);
        let h = evolve_latent(&self.atilde, h.view(), k, linalg::norm2(u_n.as_slice().unwrap_or(&u_n.to_vec())))?;
        Ok(self.basis.dot(&h))
    }

    /// `Re(Φ W Λ^k W⁻¹ Φᵀ u_n)`.
    pub fn predict_eigen(&self, u_n: ArrayView1<'_, f64>, k: usize) -> Result<Array1<f64>> {
        if u_n.len() != self.basis.nrows() {
            return Err(invalid("state length does not match the basis"));
        }
        let e = self.eigen()?;
        let rho = e.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if rho > 1.0 {
            log::warn!("DMD operator has unstable modes (spectral radius {rho:.6})");
        }
        let h: Array1<c64> = self.basis.t().dot(&u_n).mapv(|v| c64::new(v, 0.0));
        let mut b = e.inverse.dot(&h);
        for (bi, li) in b.iter_mut().zip(e.values.iter()) {
            *bi *= li.powu(k as u32);
        }
        let hk: Array1<f64> = e.vectors.dot(&b).mapv(|z| z.re);
        let out = self.basis.dot(&hk);
        let scale = linalg::norm2(&u_n.to_vec());
        if linalg::norm2(&hk.to_vec()) > OVERFLOW_GUARD * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Unstable { steps: k, spectral_radius: rho });
        }
        Ok(out)
    }

    /// Predictions for `k = 0..=steps` as columns.
    pub fn trajectory(&self, u_0: ArrayView1<'_, f64>, steps: usize) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((self.basis.nrows(), steps + 1));
        let mut h = self.basis.t().dot(&u_0);
        let scale = linalg::norm2(&u_0.to_vec());
        for k in 0..=steps {
            if k > 0 {
                h = evolve_latent(&self.atilde, h.view(), 1, scale)?;
                if linalg::norm2(&h.to_vec()) > OVERFLOW_GUARD * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::Unstable { steps: k, spectral_radius: self.spectral_radius().unwrap_or(f64::NAN) });
                }
            }
            out.column_mut(k).assign(&self.basis.dot(&h));
        }
        Ok(out)
    }
}

/// `Ã^k h` with the divergence guard relative to `scale`.
pub fn evolve_latent(a: &Array2<f64>, h: ArrayView1<'_, f64>, k: usize, scale: f64) -> Result<Array1<f64>> {
    let mut h = h.to_owned();
    let limit = OVERFLOW_GUARD * scale.max(f64::MIN_POSITIVE);
    for step in 1..=k {
        h = a.dot(&h);
        let n = linalg::norm2(h.as_slice().expect("contiguous"));
        if !(n <= limit) {
            let rho = linalg::eig(a)
                .map(|(l, _)| l.iter().map(|z| z.norm()).fold(0.0, f64::max))
                .unwrap_or(f64::NAN);
            return Err(Error::Unstable { steps: step, spectral_radius: rho });
        }
    }
    Ok(h)
}

/// Latent coordinates of one parameter over time.
#[derive(Debug, Clone)]
pub struct LatentTrajectory {
    /// `r x n_t`; column k is the latent state at `times.time(k)`.
    pub coords: Array2<f64>,
    pub times: TimeAxis,
    pub param: Vec<f64>,
    pub compressor: String,
}

impl LatentTrajectory {
    pub fn new(coords: Array2<f64>, times: TimeAxis, param: Vec<f64>, compressor: impl Into<String>) -> Result<Self> {
        if coords.ncols() != times.count {
            return Err(invalid("latent columns do not match the time axis"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite latent coordinate"));
        }
        Ok(LatentTrajectory { coords, times, param, compressor: compressor.into() })
    }
}

/// `Ã = H⁺ (H⁻)^†` with the default pseudo-inverse cutoff.
pub fn fit_latent_dmd(h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    fit_latent_dmd_with(h, LATENT_RCOND)
}

pub fn fit_latent_dmd_with(h: ArrayView2<'_, f64>, rcond: f64) -> Result<Array2<f64>> {
    let (r, nt) = h.dim();
    if nt < 2 || nt - 1 < r {
        return Err(invalid(format!("{nt} latent snapshots underdetermine a {r}x{r} operator")));
    }
    let h_minus = h.slice(s![.., ..nt - 1]);
    let h_plus = h.slice(s![.., 1..]);
    let p = linalg::pinv(h_minus, rcond)?;
    Ok(h_plus.dot(&p))
}

/// `max_k ‖h^{k+1} − Ã h^k‖ / ‖h^k‖` over a trajectory.
pub fn one_step_residual(a: &Array2<f64>, h: ArrayView2<'_, f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..h.ncols().saturating_sub(1) {
        let pred = a.dot(&h.column(k));
        let diff: Vec<f64> = pred.iter().zip(h.column(k + 1).iter()).map(|(p, q)| p - q).collect();
        let den = linalg::norm2(&h.column(k).to_vec());
        if den > 0.0 {
            worst = worst.max(linalg::norm2(&diff) / den);
        }
    }
    worst
}
