//! Direct tridiagonal solves: Thomas for open rows, Sherman-Morrison for the
//! cyclic (periodic) closure.

use crate::error::{Error, Result};

/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
/// In the cyclic case `lower[0]` couples to `x[n-1]` and `upper[n-1]` to `x[0]`;
/// otherwise those two entries are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub cyclic: bool,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                } else if self.cyclic {
                    v += self.lower[0] * x[n - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                } else if self.cyclic {
                    v += self.upper[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    /// `‖A x − rhs‖∞ / ‖rhs‖∞` (absolute when `rhs` vanishes).
    pub fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let ax = self.apply(x);
        let res = ax.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            res / scale
        } else {
            res
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.len() {
            return Err(Error::InvalidInput("tridiagonal rhs length mismatch".into()));
        }
        if self.cyclic {
            self.solve_cyclic(rhs)
        } else {
            thomas(&self.lower, &self.diag, &self.upper, rhs)
        }
    }

    fn solve_cyclic(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if n < 3 {
            return Err(Error::InvalidInput("cyclic system needs at least 3 rows".into()));
        }
        let alpha = self.upper[n - 1];
        let beta = self.lower[0];
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= alpha * beta / gamma;
        let x = thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = alpha;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;
        let num = x[0] + beta * x[n - 1] / gamma;
        let den = 1.0 + z[0] + beta * z[n - 1] / gamma;
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Singular("cyclic tridiagonal correction".into()));
        }
        let fact = num / den;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::Singular("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Singular(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
