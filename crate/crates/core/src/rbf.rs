//! Cubic radial basis interpolation `φ(r) = r³` with a linear polynomial tail.
//!
//! Nodes are mapped into the box `[-1, 1]^d` per dimension before building
//! the system so that parameters with different physical units weigh equally.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::{FactorizeInto, LUFactorized, Solve};
use ndarray::OwnedRepr;

use crate::error::{invalid, Error, Result};

pub const KERNEL_ID: &str = "cubic+linear";

fn cubic(r: f64) -> f64 {
    r * r * r
}

/// Factorized interpolation system for a fixed node set; reusable for any
/// number of right-hand sides.
pub struct RbfSystem {
    nodes: Array2<f64>,
    center: Array1<f64>,
    half: Array1<f64>,
    lu: LUFactorized<OwnedRepr<f64>>,
}

/// Interpolant with one column of weights per output component.
#[derive(Debug, Clone)]
pub struct RbfInterpolant {
    /// Nodes in the scaled box coordinates.
    pub nodes: Array2<f64>,
    pub center: Array1<f64>,
    pub half: Array1<f64>,
    /// `n_nodes x n_out` kernel weights.
    pub weights: Array2<f64>,
    /// `(d+1) x n_out` coefficients of `[1, x_1..x_d]`.
    pub tail: Array2<f64>,
}

impl RbfSystem {
    pub fn new(nodes: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, d) = nodes.dim();
        if n < d + 1 {
            return Err(invalid(format!("{n} RBF nodes cannot carry a linear tail in {d} dimensions")));
        }
        for i in 0..n {
            for k in 0..i {
                if nodes.row(i) == nodes.row(k) {
                    return Err(Error::Singular(format!("duplicate RBF nodes {k} and {i}")));
                }
            }
        }
        let mut center = Array1::zeros(d);
        let mut half = Array1::ones(d);
        for j in 0..d {
            let col = nodes.column(j);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            center[j] = 0.5 * (lo + hi);
            if hi > lo {
                half[j] = 0.5 * (hi - lo);
            }
        }
        let scaled = Array2::from_shape_fn((n, d), |(i, j)| (nodes[[i, j]] - center[j]) / half[j]);
        let m = n + d + 1;
        let mut a = Array2::zeros((m, m));
        for i in 0..n {
            for k in 0..n {
                a[[i, k]] = cubic(dist(scaled.row(i), scaled.row(k)));
            }
            a[[i, n]] = 1.0;
            a[[n, i]] = 1.0;
            for j in 0..d {
                a[[i, n + 1 + j]] = scaled[[i, j]];
                a[[n + 1 + j, i]] = scaled[[i, j]];
            }
        }
        let lu = a.factorize_into().map_err(|e| Error::Singular(format!("RBF system: {e}")))?;
        Ok(RbfSystem { nodes: scaled, center, half, lu })
    }

    pub fn len(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interpolant for `values` (`n_nodes x n_out`).
    pub fn fit(&self, values: ArrayView2<'_, f64>) -> Result<RbfInterpolant> {
        let (n, d) = self.nodes.dim();
        if values.nrows() != n {
            return Err(invalid("RBF values do not match node count"));
        }
        let n_out = values.ncols();
        let mut weights = Array2::zeros((n, n_out));
        let mut tail = Array2::zeros((d + 1, n_out));
        for c in 0..n_out {
            let mut rhs = Array1::zeros(n + d + 1);
            rhs.slice_mut(ndarray::s![..n]).assign(&values.column(c));
            let sol = self.lu.solve(&rhs).map_err(|e| Error::Singular(format!("RBF solve: {e}")))?;
            if sol.iter().any(|v| !v.is_finite()) {
                return Err(Error::Singular("RBF system produced non-finite weights".into()));
            }
            weights.column_mut(c).assign(&sol.slice(ndarray::s![..n]));
            tail.column_mut(c).assign(&sol.slice(ndarray::s![n..]));
        }
        Ok(RbfInterpolant {
            nodes: self.nodes.clone(),
            center: self.center.clone(),
            half: self.half.clone(),
            weights,
            tail,
        })
    }
}

fn dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl RbfInterpolant {
    /// One-shot construction for nodes `n x d` and values `n x n_out`.
    pub fn new(nodes: ArrayView2<'_, f64>, values: ArrayView2<'_, f64>) -> Result<Self> {
        RbfSystem::new(nodes)?.fit(values)
    }

    pub fn dim(&self) -> usize {
        self.nodes.ncols()
    }

    /// True when `x` lies outside the bounding box of the nodes.
    pub fn outside_hull_box(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .any(|(j, &v)| ((v - self.center[j]) / self.half[j]).abs() > 1.0 + 1e-12)
    }

    /// All output components at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Array1<f64>> {
        let d = self.dim();
        if x.len() != d {
            return Err(invalid(format!("query has {} coordinates, interpolant {d}", x.len())));
        }
        let xs: Array1<f64> = (0..d).map(|j| (x[j] - self.center[j]) / self.half[j]).collect();
        let mut out = self.tail.row(0).to_owned();
        for j in 0..d {
            out.scaled_add(xs[j], &self.tail.row(j + 1));
        }
        for i in 0..self.nodes.nrows() {
            let phi = cubic(dist(self.nodes.row(i), xs.view()));
            out.scaled_add(phi, &self.weights.row(i));
        }
        Ok(out)
    }

    /// Evaluate output component 0 at many 1D points.
    pub fn eval_1d(&self, xs: &[f64]) -> Vec<f64> {
        let (c, h) = (self.center[0], self.half[0]);
        let n = self.nodes.nrows();
        xs.iter()
            .map(|&x| {
                let s = (x - c) / h;
                let mut v = self.tail[[0, 0]] + self.tail[[1, 0]] * s;
                for i in 0..n {
                    v += cubic((s - self.nodes[[i, 0]]).abs()) * self.weights[[i, 0]];
                }
                v
            })
            .collect()
    }
}
