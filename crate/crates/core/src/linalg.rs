//! Thin wrappers over LAPACK (through `ndarray-linalg`) with this crate's
//! error type and the truncation conventions used everywhere else.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{c64, Eig, Inverse, JobSvd, Solve, SVDDC};

use crate::error::{invalid, Error, Result};

/// Relative floor below which a singular value counts as zero.
pub const SIGMA_FLOOR: f64 = 1e-12;

fn lapack(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Linalg(format!("{what}: {e}"))
}

/// Thin SVD `a = U diag(s) Vt` with `min(m, n)` singular triplets.
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

pub fn svd(a: ArrayView2<'_, f64>) -> Result<Svd> {
    if a.is_empty() {
        return Err(invalid("SVD of an empty matrix"));
    }
    let a = a.as_standard_layout();
    let (u, s, vt) = a.svddc(JobSvd::Some).map_err(|e| lapack("svd", e))?;
    let (u, vt) = match (u, vt) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Linalg("svd returned no singular vectors".into())),
    };
    Ok(Svd { u, s, vt })
}

pub fn singular_values(a: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if a.is_empty() {
        return Err(invalid("SVD of an empty matrix"));
    }
    let a = a.as_standard_layout();
    let (_, s, _) = a.svddc(JobSvd::None).map_err(|e| lapack("svd", e))?;
    Ok(s)
}

/// Count of singular values above `rel * s[0]`.
pub fn numerical_rank(s: &Array1<f64>, rel: f64) -> usize {
    match s.first() {
        Some(&s0) if s0 > 0.0 => s.iter().take_while(|&&v| v > rel * s0).count(),
        _ => 0,
    }
}

/// Moore-Penrose pseudo-inverse discarding singular values below `rcond * s[0]`.
pub fn pinv(a: ArrayView2<'_, f64>, rcond: f64) -> Result<Array2<f64>> {
    let Svd { u, s, vt } = svd(a)?;
    let keep = numerical_rank(&s, rcond);
    let mut vs = vt.slice(ndarray::s![..keep, ..]).t().to_owned();
    for (mut col, &sv) in vs.axis_iter_mut(Axis(1)).zip(s.iter()) {
        col /= sv;
    }
    Ok(vs.dot(&u.slice(ndarray::s![.., ..keep]).t()))
}

pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    a.solve(b).map_err(|e| Error::Singular(e.to_string()))
}

/// Eigenvalues and right eigenvectors (columns) of a real square matrix.
pub fn eig(a: &Array2<f64>) -> Result<(Array1<c64>, Array2<c64>)> {
    a.eig().map_err(|e| lapack("eig", e))
}

pub fn inv_complex(a: &Array2<c64>) -> Result<Array2<c64>> {
    a.inv().map_err(|e| Error::Singular(e.to_string()))
}

pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖ΦᵀΦ − I‖_F`.
pub fn orthonormality_defect(phi: ArrayView2<'_, f64>) -> f64 {
    let g = phi.t().dot(&phi);
    let r = g.nrows();
    frobenius((g - Array2::<f64>::eye(r)).view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn svd_reconstructs() {
        let a = array![[3.0, 1.0], [1.0, 3.0], [0.0, 2.0]];
        let Svd { u, s, vt } = svd(a.view()).unwrap();
        let rec = u.dot(&Array2::from_diag(&s)).dot(&vt);
        for (x, y) in rec.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
        assert!(s[0] >= s[1]);
        assert!(orthonormality_defect(u.view()) < 1e-13);
    }

    #[test]
    fn pinv_of_rank_one() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let p = pinv(a.view(), 1e-12).unwrap();
        let apa = a.dot(&p).dot(&a);
        for (x, y) in apa.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p[[0, 0]], 1.0 / 25.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_counts() {
        let s = array![1.0, 1e-3, 1e-11, 0.0];
        assert_eq!(numerical_rank(&s, 1e-10), 2);
        assert_eq!(numerical_rank(&array![0.0, 0.0], 1e-10), 0);
    }

    #[test]
    fn eig_of_rotation() {
        let a = array![[0.0, -1.0], [1.0, 0.0]];
        let (l, _) = eig(&a).unwrap();
        let mut im: Vec<f64> = l.iter().map(|z| z.im).collect();
        im.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(im[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(im[1], 1.0, epsilon = 1e-14);
    }
}
