use ndarray::{Array2, Array4};

use super::tridiag::Tridiagonal;
use super::{check_finite, AdvectionDiffusionProblem1D, Boundary, SolveReport, CFL_SLACK};
use crate::error::{invalid, Error, Result};
use crate::snapshot::{Frame, Grid, ParamSet, SnapshotSet, TimeAxis};

pub(crate) fn check_setup(p: &AdvectionDiffusionProblem1D, g: &Grid, substeps: usize, mu: &[f64]) -> Result<()> {
    if g.dim() != 1 {
        return Err(invalid("1D solver needs a 1D grid"));
    }
    if substeps == 0 {
        return Err(invalid("substeps must be positive"));
    }
    if mu.len() != p.param_names.len() {
        return Err(invalid(format!("{} expects {} parameters, got {}", p.name, p.param_names.len(), mu.len())));
    }
    match (p.boundary, g.is_periodic(0)) {
        (Boundary::Periodic, true) | (Boundary::Dirichlet { .. }, false) => Ok(()),
        _ => Err(invalid("boundary condition and grid periodicity disagree")),
    }
}

/// Values padded with one ghost on each side.
fn with_ghosts(u: &[f64], bc: Boundary) -> Vec<f64> {
    let n = u.len();
    let (l, r) = match bc {
        Boundary::Periodic => (u[n - 1], u[0]),
        Boundary::Dirichlet { left, right } => (left, right),
    };
    let mut e = Vec::with_capacity(n + 2);
    e.push(l);
    e.extend_from_slice(u);
    e.push(r);
    e
}

/// Explicit upwind flux update; returns the updated state and the largest |a| used.
fn advect(p: &AdvectionDiffusionProblem1D, u: &[f64], dt: f64, dx: f64, mu: &[f64]) -> (Vec<f64>, f64) {
    let n = u.len();
    let e = with_ghosts(u, p.boundary);
    let mut face = Vec::with_capacity(n + 1);
    let mut amax: f64 = 0.0;
    for k in 0..=n {
        let (ul, ur) = (e[k], e[k + 1]);
        let (fl, fr) = ((p.flux)(ul, mu), (p.flux)(ur, mu));
        let a = if (ur - ul).abs() < 1e-14 * ul.abs().max(1.0) {
            (p.speed)(ul, mu)
        } else {
            (fr - fl) / (ur - ul)
        };
        amax = amax.max(a.abs());
        face.push(0.5 * (fr + fl) - 0.5 * a.abs() * (ur - ul));
    }
    let out = (0..n).map(|j| u[j] - dt / dx * (face[j + 1] - face[j])).collect();
    (out, amax)
}

/// Backward-Euler diffusion step `(I - Δt L_D) u_new = u_star` with face
/// coefficients `(D_j + D_{j+1}) / 2`. `d` holds nodal D, plus the two ghost
/// coefficients. Returns the new state and the solve residual.
pub(crate) fn implicit_diffusion(
    u_star: &[f64],
    d: &[f64],
    d_ghost: (f64, f64),
    bc: Boundary,
    dt: f64,
    dx: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = u_star.len();
    let r = dt / (dx * dx);
    let dl = |j: usize| -> f64 {
        if j == 0 {
            match bc {
                Boundary::Periodic => 0.5 * (d[n - 1] + d[0]),
                Boundary::Dirichlet { .. } => 0.5 * (d_ghost.0 + d[0]),
            }
        } else {
            0.5 * (d[j - 1] + d[j])
        }
    };
    let dr = |j: usize| -> f64 {
        if j + 1 == n {
            match bc {
                Boundary::Periodic => 0.5 * (d[n - 1] + d[0]),
                Boundary::Dirichlet { .. } => 0.5 * (d[n - 1] + d_ghost.1),
            }
        } else {
            0.5 * (d[j] + d[j + 1])
        }
    };
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = u_star.to_vec();
    for j in 0..n {
        let (a, b) = (dl(j), dr(j));
        lower[j] = -r * a;
        upper[j] = -r * b;
        diag[j] = 1.0 + r * (a + b);
    }
    let cyclic = matches!(bc, Boundary::Periodic);
    if let Boundary::Dirichlet { left, right } = bc {
        rhs[0] -= lower[0] * left;
        rhs[n - 1] -= upper[n - 1] * right;
    }
    let t = Tridiagonal { lower, diag, upper, cyclic };
    let x = t.solve(&rhs)?;
    let res = t.relative_residual(&x, &rhs);
    Ok((x, res))
}

pub(crate) fn nodal_diffusion(
    p: &AdvectionDiffusionProblem1D,
    g: &Grid,
    t: f64,
    u: &[f64],
    mu: &[f64],
) -> Result<(Vec<f64>, (f64, f64))> {
    let n = u.len();
    let d: Vec<f64> = (0..n).map(|j| (p.diffusion)(g.node(0, j), t, u[j], mu)).collect();
    let ghost = match p.boundary {
        Boundary::Periodic => (0.0, 0.0),
        Boundary::Dirichlet { left, right } => {
            let dx = g.spacing(0);
            let (a, b) = g.bounds()[0];
            ((p.diffusion)(a - dx, t, left, mu), (p.diffusion)(b + dx, t, right, mu))
        }
    };
    if d.iter().chain([&ghost.0, &ghost.1]).any(|v| !(*v >= 0.0)) {
        return Err(invalid(format!("negative or undefined diffusion at t = {t}")));
    }
    Ok((d, ghost))
}

pub(crate) fn single_param_set(
    names: &[String],
    mu: &[f64],
    g: &Grid,
    times: &TimeAxis,
    frame: Frame,
    channels: Vec<String>,
    frames: Vec<Vec<Vec<f64>>>,
) -> Result<SnapshotSet> {
    let nc = channels.len();
    let ns = g.len();
    let mut data = Array4::zeros((1, times.count, nc, ns));
    for (k, chans) in frames.iter().enumerate() {
        for (c, v) in chans.iter().enumerate() {
            for (j, &x) in v.iter().enumerate() {
                data[[0, k, c, j]] = x;
            }
        }
    }
    let params = ParamSet::new(
        names.to_vec(),
        Array2::from_shape_vec((1, mu.len()), mu.to_vec()).map_err(|e| invalid(e.to_string()))?,
    )?;
    SnapshotSet::new(Some(g.clone()), params, *times, frame, channels, data)
}

/// Eulerian upwind/implicit-diffusion solve, recording every `substeps`-th step.
pub fn solve_eulerian_1d(
    p: &AdvectionDiffusionProblem1D,
    g: &Grid,
    times: &TimeAxis,
    substeps: usize,
    mu: &[f64],
) -> Result<(SnapshotSet, SolveReport)> {
    check_setup(p, g, substeps, mu)?;
    let dx = g.spacing(0);
    let dt = times.dt / substeps as f64;
    let mut u: Vec<f64> = (0..g.len()).map(|j| (p.initial)(g.node(0, j), mu)).collect();
    check_finite(&u, 0)?;
    let mut report = SolveReport::default();
    let mut frames = vec![vec![u.clone()]];
    let mut step = 0;
    for k in 1..times.count {
        for s in 0..substeps {
            step += 1;
            let t_new = times.time(k - 1) + (s + 1) as f64 * dt;
            let fmax = u.iter().map(|&v| (p.speed)(v, mu).abs()).fold(0.0, f64::max);
            let (u_star, amax) = advect(p, &u, dt, dx, mu);
            let speed = fmax.max(amax);
            let (d, ghost) = nodal_diffusion(p, g, t_new, &u, mu)?;
            let dmax = d.iter().copied().fold(0.0, f64::max);
            report.cfl.advective = report.cfl.advective.max(dt * speed / dx);
            report.cfl.max_speed = report.cfl.max_speed.max(fmax);
            report.cfl.diffusive = report.cfl.diffusive.max(dmax * dt / (dx * dx));
            if dt * speed / dx > 1.0 + CFL_SLACK {
                return Err(Error::Stability { step, report: report.cfl });
            }
            u = if dmax > 0.0 || ghost.0 > 0.0 || ghost.1 > 0.0 {
                let (x, res) = implicit_diffusion(&u_star, &d, ghost, p.boundary, dt, dx)?;
                report.max_residual = report.max_residual.max(res);
                x
            } else {
                u_star
            };
            check_finite(&u, step)?;
        }
        frames.push(vec![u.clone()]);
    }
    report.steps = step;
    let set = single_param_set(&p.param_names, mu, g, times, Frame::Eulerian, vec!["u".into()], frames)?;
    Ok((set, report))
}
