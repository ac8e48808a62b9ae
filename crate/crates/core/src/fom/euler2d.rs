use ndarray::{Array2, Array4};

use super::{check_finite, Problem2D, SolveReport, CFL_SLACK};
use crate::error::{invalid, Error, Result};
use crate::snapshot::{Frame, Grid, ParamSet, SnapshotSet, TimeAxis};

pub(crate) fn check_grid_2d(g: &Grid, substeps: usize) -> Result<()> {
    if g.dim() != 2 || !g.is_periodic(0) || !g.is_periodic(1) {
        return Err(invalid("2D solvers need a doubly periodic 2D grid"));
    }
    if substeps == 0 {
        return Err(invalid("substeps must be positive"));
    }
    Ok(())
}

/// Five-point periodic Laplacian of a row-major (y fastest) field.
pub(crate) fn laplacian(f: &[f64], nx: usize, ny: usize, dx: f64, dy: f64) -> Vec<f64> {
    let (ix, iy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        let (im, ip) = ((i + nx - 1) % nx, (i + 1) % nx);
        for j in 0..ny {
            let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
            let c = f[i * ny + j];
            out[i * ny + j] = (f[im * ny + j] - 2.0 * c + f[ip * ny + j]) * ix + (f[i * ny + jm] - 2.0 * c + f[i * ny + jp]) * iy;
        }
    }
    out
}

/// Stability numbers of one forward-Euler step; errors when either exceeds 1.
pub(crate) fn check_step(
    report: &mut SolveReport,
    step: usize,
    dt: f64,
    (dx, dy): (f64, f64),
    advective: f64,
    max_speed: f64,
    diffusion: f64,
) -> Result<()> {
    let diffusive = 2.0 * diffusion * dt * (1.0 / (dx * dx) + 1.0 / (dy * dy));
    let cfl = &mut report.cfl;
    cfl.advective = cfl.advective.max(advective);
    cfl.max_speed = cfl.max_speed.max(max_speed);
    cfl.diffusive = cfl.diffusive.max(diffusive);
    if advective > 1.0 + CFL_SLACK || diffusive > 1.0 + CFL_SLACK {
        return Err(Error::Stability { step, report: *cfl });
    }
    Ok(())
}

pub(crate) fn initial_state(p: &Problem2D, g: &Grid) -> Vec<Vec<f64>> {
    let x = g.mesh(0);
    let y = g.mesh(1);
    let nc = p.state_names().len();
    let mut out = vec![vec![0.0; g.len()]; nc];
    for k in 0..g.len() {
        for (c, v) in p.initial(x[k], y[k]).into_iter().enumerate() {
            out[c][k] = v;
        }
    }
    out
}

pub(crate) fn problem_params(p: &Problem2D) -> Result<ParamSet> {
    let (name, value) = match *p {
        Problem2D::AdvectionDiffusion { theta, .. } => ("theta", theta),
        Problem2D::Burgers { mu, .. } => ("mu", mu),
    };
    ParamSet::new(vec![name.into()], Array2::from_elem((1, 1), value))
}

pub(crate) fn assemble(
    p: &Problem2D,
    g: &Grid,
    times: &TimeAxis,
    frame: Frame,
    channels: Vec<String>,
    frames: Vec<Vec<Vec<f64>>>,
) -> Result<SnapshotSet> {
    let mut data = Array4::zeros((1, times.count, channels.len(), g.len()));
    for (k, chans) in frames.iter().enumerate() {
        for (c, v) in chans.iter().enumerate() {
            for (j, &x) in v.iter().enumerate() {
                data[[0, k, c, j]] = x;
            }
        }
    }
    SnapshotSet::new(Some(g.clone()), problem_params(p)?, *times, frame, channels, data)
}

/// Forward Euler with per-cell upwinding and a central Laplacian, periodic in both axes.
pub fn solve_eulerian_2d(p: &Problem2D, g: &Grid, times: &TimeAxis, substeps: usize) -> Result<(SnapshotSet, SolveReport)> {
    p.validate()?;
    check_grid_2d(g, substeps)?;
    let (nx, ny) = (g.points()[0], g.points()[1]);
    let (dx, dy) = (g.spacing(0), g.spacing(1));
    let dt = times.dt / substeps as f64;
    let diff = p.diffusion();
    let mut state = initial_state(p, g);
    let mut report = SolveReport::default();
    let mut frames = vec![state.clone()];
    let mut step = 0;
    for _ in 1..times.count {
        for _ in 0..substeps {
            step += 1;
            let (vx, vy): (Vec<f64>, Vec<f64>) = match *p {
                Problem2D::AdvectionDiffusion { theta, .. } => (vec![theta.cos(); nx * ny], vec![theta.sin(); nx * ny]),
                Problem2D::Burgers { .. } => (state[0].clone(), state[1].clone()),
            };
            let mut adv: f64 = 0.0;
            let mut vmax: f64 = 0.0;
            for k in 0..nx * ny {
                adv = adv.max(dt * (vx[k].abs() / dx + vy[k].abs() / dy));
                vmax = vmax.max(vx[k].hypot(vy[k]));
            }
            check_step(&mut report, step, dt, (dx, dy), adv, vmax, diff)?;
            let next: Vec<Vec<f64>> = state
                .iter()
                .map(|f| {
                    let lap = laplacian(f, nx, ny, dx, dy);
                    let mut out = vec![0.0; nx * ny];
                    for i in 0..nx {
                        let (im, ip) = ((i + nx - 1) % nx, (i + 1) % nx);
                        for j in 0..ny {
                            let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
                            let k = i * ny + j;
                            let c = f[k];
                            let fx = if vx[k] > 0.0 { (c - f[im * ny + j]) / dx } else { (f[ip * ny + j] - c) / dx };
                            let fy = if vy[k] > 0.0 { (c - f[i * ny + jm]) / dy } else { (f[i * ny + jp] - c) / dy };
                            out[k] = c + dt * (-vx[k] * fx - vy[k] * fy + diff * lap[k]);
                        }
                    }
                    out
                })
                .collect();
            state = next;
            for f in &state {
                check_finite(f, step)?;
            }
        }
        frames.push(state.clone());
    }
    report.steps = step;
    let channels = p.state_names().iter().map(|s| s.to_string()).collect();
    let set = assemble(p, g, times, Frame::Eulerian, channels, frames)?;
    Ok((set, report))
}
