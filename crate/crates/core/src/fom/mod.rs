//! Full-order solvers and closed-form references.

mod euler1d;
mod euler2d;
pub mod exact;
mod lagrangian1d;
mod lagrangian2d;
pub mod tridiag;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, CflReport, Result};

pub use euler1d::solve_eulerian_1d;
pub use euler2d::solve_eulerian_2d;
pub use exact::{advdiff1d_exact, burgers1d_exact};
pub use lagrangian1d::{solve_lagrangian_1d, solve_lagrangian_1d_with};
pub use lagrangian2d::{solve_lagrangian_2d, solve_lagrangian_2d_with};

/// `F(u; μ)` or `f(u; μ)`.
pub type FluxFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// `D(x, t, u; μ)`.
pub type DiffusionFn = Arc<dyn Fn(f64, f64, f64, &[f64]) -> f64 + Send + Sync>;
/// `u0(x; μ)`.
pub type InitialFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// How a Lagrangian solver brings the grid diffusion step back to the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transfer {
    /// Nodes take the interpolated diffused grid field. Each step adds
    /// interpolation smoothing of order `Δx² u''`, which also damps node-scale
    /// velocity differences.
    Value,
    /// Nodes keep their values and add the interpolated grid increment, so only
    /// the physical diffusion acts.
    Increment,
}

impl std::str::FromStr for Transfer {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value" => Ok(Transfer::Value),
            "increment" => Ok(Transfer::Increment),
            other => Err(invalid(format!("unknown transfer '{other}' (value, increment)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Ghost values equal the data on both sides.
    Dirichlet { left: f64, right: f64 },
}

/// `u_t + f(u) u_x = (D u_x)_x` with `f = F'`.
#[derive(Clone)]
pub struct AdvectionDiffusionProblem1D {
    pub name: String,
    pub param_names: Vec<String>,
    pub flux: FluxFn,
    pub speed: FluxFn,
    pub diffusion: DiffusionFn,
    pub initial: InitialFn,
    pub boundary: Boundary,
}

impl fmt::Debug for AdvectionDiffusionProblem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdvectionDiffusionProblem1D")
            .field("name", &self.name)
            .field("param_names", &self.param_names)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

impl AdvectionDiffusionProblem1D {
    /// Constant-speed transport `u_t + c u_x = 0`, `μ = [c]`.
    pub fn linear_advection(initial: InitialFn, boundary: Boundary) -> Self {
        AdvectionDiffusionProblem1D {
            name: "advection".into(),
            param_names: vec!["c".into()],
            flux: Arc::new(|u, mu| mu[0] * u),
            speed: Arc::new(|_, mu| mu[0]),
            diffusion: Arc::new(|_, _, _, _| 0.0),
            initial,
            boundary,
        }
    }

    /// Narrow Gaussian pulse transported with speed `c` on a periodic domain.
    pub fn pulse_advection() -> Self {
        let mut p = Self::linear_advection(Arc::new(|x, _| exact::pulse(x)), Boundary::Periodic);
        p.name = "adv1d".into();
        p
    }

    /// Viscous Burgers `u_t + u u_x = u_xx / Re`, `μ = [Re]`, started from the closed form at t = 0.
    pub fn burgers_viscous() -> Self {
        AdvectionDiffusionProblem1D {
            name: "burgers1d".into(),
            param_names: vec!["Re".into()],
            flux: Arc::new(|u, _| 0.5 * u * u),
            speed: Arc::new(|u, _| u),
            diffusion: Arc::new(|_, _, _, mu| 1.0 / mu[0]),
            initial: Arc::new(|x, mu| exact::burgers1d_exact_point(x, 0.0, mu[0])),
            boundary: Boundary::Dirichlet { left: 0.0, right: 0.0 },
        }
    }

    /// Unit-speed transport of the window `[0.35, 0.65]` with diffusion `μ = [D]`,
    /// started from the diffused window at `σ0`.
    pub fn window_advection_diffusion(sigma0: f64) -> Self {
        AdvectionDiffusionProblem1D {
            name: "advdiff1d".into(),
            param_names: vec!["mu".into()],
            flux: Arc::new(|u, _| u),
            speed: Arc::new(|_, _| 1.0),
            diffusion: Arc::new(|_, _, _, mu| mu[0]),
            initial: Arc::new(move |x, mu| exact::advdiff1d_exact_point(x, 0.0, mu[0], sigma0)),
            boundary: Boundary::Periodic,
        }
    }

    /// Check `f ≈ dF/du` by central differences at `samples`.
    pub fn check_consistency(&self, mu: &[f64], samples: &[f64]) -> Result<()> {
        for &u in samples {
            let h = 1e-6 * u.abs().max(1.0);
            let fd = ((self.flux)(u + h, mu) - (self.flux)(u - h, mu)) / (2.0 * h);
            let f = (self.speed)(u, mu);
            if (fd - f).abs() > 1e-6 * f.abs().max(1.0) {
                return Err(invalid(format!("f({u}) = {f} disagrees with dF/du = {fd}")));
            }
        }
        Ok(())
    }
}

/// 2D periodic problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem2D {
    /// `u_t + cosθ u_x + sinθ u_y = D Δu`, Gaussian at (2, 2) initially.
    AdvectionDiffusion { theta: f64, diffusion: f64 },
    /// Viscous Burgers system with sine-bump initial data of amplitude `mu` over a unit background.
    Burgers { nu: f64, mu: f64 },
}

impl Problem2D {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Problem2D::AdvectionDiffusion { theta, diffusion } => {
                // 2π written to four decimals (6.2832) still counts as a full turn
                if !(0.0..=2.0 * std::f64::consts::PI + 1e-4).contains(&theta) {
                    return Err(invalid(format!("theta {theta} outside [0, 2π]")));
                }
                if !(diffusion >= 0.0) {
                    return Err(invalid("diffusion must be non-negative"));
                }
            }
            Problem2D::Burgers { nu, mu } => {
                if !(nu >= 0.0) || !mu.is_finite() {
                    return Err(invalid("viscosity must be non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        match self {
            Problem2D::AdvectionDiffusion { .. } => &["u"],
            Problem2D::Burgers { .. } => &["u", "v"],
        }
    }

    /// Increment transfer for prescribed velocities; value transfer for Burgers,
    /// whose fronts fold the node grid unless node-scale velocity noise is damped.
    pub fn default_transfer(&self) -> Transfer {
        match self {
            Problem2D::AdvectionDiffusion { .. } => Transfer::Increment,
            Problem2D::Burgers { .. } => Transfer::Value,
        }
    }

    pub fn diffusion(&self) -> f64 {
        match *self {
            Problem2D::AdvectionDiffusion { diffusion, .. } => diffusion,
            Problem2D::Burgers { nu, .. } => nu,
        }
    }

    /// Initial state channels at `(x, y)`.
    pub fn initial(&self, x: f64, y: f64) -> Vec<f64> {
        match *self {
            Problem2D::AdvectionDiffusion { .. } => {
                vec![(-((x - 2.0).powi(2) + (y - 2.0).powi(2)) / 0.1).exp()]
            }
            Problem2D::Burgers { mu, .. } => {
                let inside = (0.2..=1.2).contains(&x) && (0.2..=1.2).contains(&y);
                let bump = if inside {
                    mu * (std::f64::consts::PI * (x - 0.2)).sin() * (std::f64::consts::PI * (y - 0.2)).sin()
                } else {
                    0.0
                };
                vec![bump + 1.0, bump + 1.0]
            }
        }
    }
}

/// Diagnostics of a full-order run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub cfl: CflReport,
    /// Largest relative residual of the implicit diffusion solves (0 when none ran).
    pub max_residual: f64,
    /// Smallest node gap (1D) or normalized cell area (2D) seen; Lagrangian runs only.
    pub min_gap: Option<f64>,
    pub steps: usize,
}

pub(crate) const CFL_SLACK: f64 = 1e-12;

pub(crate) fn check_finite(v: &[f64], step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite { step })
    }
}
