use super::euler2d::{assemble, check_grid_2d, check_step, initial_state, laplacian};
use super::{check_finite, Problem2D, SolveReport, Transfer};
use crate::error::{Error, Result};
use crate::lagframe::interp::{grid_to_points_2d, DisplacedMap};
use crate::lagframe::{augmented_channels, min_cell_area_2d, tangled};
use crate::snapshot::{Frame, Grid, SnapshotSet, TimeAxis};

/// Lagrangian solve in 2D: nodes move along characteristics (trapezoidal rule
/// per axis); each step the states are mapped to the Eulerian grid, diffused
/// explicitly there, and brought back to the nodes per [`Problem2D::default_transfer`].
/// Channels are `["chi", "zeta", states...]` with unwrapped coordinates.
pub fn solve_lagrangian_2d(p: &Problem2D, g: &Grid, times: &TimeAxis, substeps: usize) -> Result<(SnapshotSet, SolveReport)> {
    solve_lagrangian_2d_with(p, g, times, substeps, p.default_transfer())
}

pub fn solve_lagrangian_2d_with(
    p: &Problem2D,
    g: &Grid,
    times: &TimeAxis,
    substeps: usize,
    transfer: Transfer,
) -> Result<(SnapshotSet, SolveReport)> {
    p.validate()?;
    check_grid_2d(g, substeps)?;
    let (nx, ny) = (g.points()[0], g.points()[1]);
    let (dx, dy) = (g.spacing(0), g.spacing(1));
    let dt = times.dt / substeps as f64;
    let diff = p.diffusion();
    let mut chi = g.mesh(0).to_vec();
    let mut zeta = g.mesh(1).to_vec();
    let mut state = initial_state(p, g);
    let mut report = SolveReport { min_gap: Some(min_cell_area_2d(&chi, &zeta, g)), ..Default::default() };
    let snapshot = |chi: &Vec<f64>, zeta: &Vec<f64>, state: &Vec<Vec<f64>>| {
        let mut v = vec![chi.clone(), zeta.clone()];
        v.extend(state.iter().cloned());
        v
    };
    let mut frames = vec![snapshot(&chi, &zeta, &state)];
    let velocity = |state: &[Vec<f64>], k: usize| -> (f64, f64) {
        match *p {
            Problem2D::AdvectionDiffusion { theta, .. } => (theta.cos(), theta.sin()),
            Problem2D::Burgers { .. } => (state[0][k], state[1][k]),
        }
    };
    let mut step = 0;
    for _ in 1..times.count {
        for _ in 0..substeps {
            step += 1;
            let old: Vec<(f64, f64)> = (0..nx * ny).map(|k| velocity(&state, k)).collect();
            let adv = old.iter().map(|&(a, b)| dt * (a.abs() / dx + b.abs() / dy)).fold(0.0, f64::max);
            let vmax = old.iter().map(|&(a, b)| a.hypot(b)).fold(0.0, f64::max);
            check_step(&mut report, step, dt, (dx, dy), adv, vmax, diff)?;
            if diff > 0.0 {
                let map = DisplacedMap::new(g, &chi, &zeta, g)?;
                for f in state.iter_mut() {
                    let on_grid = map.apply(f);
                    let lap = laplacian(&on_grid, nx, ny, dx, dy);
                    match transfer {
                        Transfer::Value => {
                            let next: Vec<f64> = on_grid.iter().zip(&lap).map(|(v, l)| v + dt * diff * l).collect();
                            *f = grid_to_points_2d(&next, g, &chi, &zeta);
                        }
                        Transfer::Increment => {
                            let inc: Vec<f64> = lap.iter().map(|l| dt * diff * l).collect();
                            for (v, d) in f.iter_mut().zip(grid_to_points_2d(&inc, g, &chi, &zeta)) {
                                *v += d;
                            }
                        }
                    }
                    check_finite(f, step)?;
                }
            }
            for k in 0..nx * ny {
                let (a1, b1) = velocity(&state, k);
                chi[k] += 0.5 * dt * (old[k].0 + a1);
                zeta[k] += 0.5 * dt * (old[k].1 + b1);
            }
            check_finite(&chi, step)?;
            check_finite(&zeta, step)?;
            let gap = min_cell_area_2d(&chi, &zeta, g);
            report.min_gap = Some(report.min_gap.map_or(gap, |m: f64| m.min(gap)));
            if tangled(gap, g) {
                return Err(Error::Tangled { step: Some(step), min_gap: gap });
            }
        }
        frames.push(snapshot(&chi, &zeta, &state));
    }
    report.steps = step;
    let channels = augmented_channels(2, p.state_names());
    let set = assemble(p, g, times, Frame::Lagrangian, channels, frames)?;
    Ok((set, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagframe::{reconstruct_eulerian, LagrangianState, Method};

    #[test]
    fn pure_advection_moves_nodes_rigidly() {
        let theta = 2.0;
        let p = Problem2D::AdvectionDiffusion { theta, diffusion: 0.0 };
        let g = Grid::new_2d(0.0, 4.0, 20, true).unwrap();
        let t = TimeAxis::new(0.0, 0.01, 51).unwrap();
        let (s, _) = solve_lagrangian_2d(&p, &g, &t, 1).unwrap();
        let (x, y) = (g.mesh(0), g.mesh(1));
        for k in [0, 17, 50] {
            let tk = t.time(k);
            let (c, z) = (s.channel(0, k, 0), s.channel(0, k, 1));
            for j in 0..g.len() {
                assert!((c[j] - (x[j] + tk * theta.cos())).abs() < 1e-12);
                assert!((z[j] - (y[j] + tk * theta.sin())).abs() < 1e-12);
            }
            assert_eq!(s.channel(0, k, 2), s.channel(0, 0, 2));
        }
    }

    #[test]
    fn constant_burgers_translates() {
        let p = Problem2D::Burgers { nu: 0.01, mu: 0.0 };
        let g = Grid::new_2d(0.0, 5.0, 16, true).unwrap();
        let t = TimeAxis::new(0.0, 0.02, 11).unwrap();
        let (s, _) = solve_lagrangian_2d(&p, &g, &t, 4).unwrap();
        let (x, y) = (g.mesh(0), g.mesh(1));
        let (c, z) = (s.channel(0, 10, 0), s.channel(0, 10, 1));
        for j in 0..g.len() {
            assert!((c[j] - (x[j] + 0.2)).abs() < 1e-12 && (z[j] - (y[j] + 0.2)).abs() < 1e-12);
        }
        for ch in 2..4 {
            assert!(s.channel(0, 10, ch).iter().all(|&v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn burgers_energy_non_increasing() {
        let p = Problem2D::Burgers { nu: 0.01, mu: 0.6 };
        let g = Grid::new_2d(0.0, 5.0, 128, true).unwrap();
        let t = TimeAxis::new(0.0, 0.02, 101).unwrap();
        let (s, _) = solve_lagrangian_2d(&p, &g, &t, 4).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..t.count {
            let st = LagrangianState::new(
                g.clone(),
                vec![s.channel(0, k, 0).to_vec(), s.channel(0, k, 1).to_vec()],
                vec![s.channel(0, k, 2).to_vec()],
            )
            .unwrap();
            let u = &reconstruct_eulerian(&st, &g, Method::Linear).unwrap()[0];
            let e: f64 = u.iter().map(|v| v * v).sum();
            assert!(e <= last * (1.0 + 1e-12), "step {k}: {e} > {last}");
            last = e;
        }
    }

    /// Gaussian of variance 0.05 diffused for time `t` and moved along `θ`, on the periodic `[0, 4]²`.
    fn diffused_gaussian(g: &Grid, theta: f64, d: f64, t: f64) -> Vec<f64> {
        let var = 0.05 + 2.0 * d * t;
        let w = |z: f64, sh: f64| {
            let y = z - sh;
            let y = y - 4.0 * ((y - 2.0) / 4.0).round();
            (-(y - 2.0).powi(2) / (2.0 * var)).exp()
        };
        let (x, y) = (g.mesh(0), g.mesh(1));
        (0..g.len()).map(|j| 0.05 / var * w(x[j], t * theta.cos()) * w(y[j], t * theta.sin())).collect()
    }

    #[test]
    fn increment_transfer_keeps_physical_diffusion_only() {
        let (theta, d) = (0.9, 1e-3);
        let p = Problem2D::AdvectionDiffusion { theta, diffusion: d };
        let g = Grid::new_2d(0.0, 4.0, 40, true).unwrap();
        let t = TimeAxis::new(0.0, 0.01, 101).unwrap();
        let exact = diffused_gaussian(&g, theta, d, 1.0);
        let err = |transfer| {
            let (s, _) = solve_lagrangian_2d_with(&p, &g, &t, 1, transfer).unwrap();
            let st = LagrangianState::new(
                g.clone(),
                vec![s.channel(0, 100, 0).to_vec(), s.channel(0, 100, 1).to_vec()],
                vec![s.channel(0, 100, 2).to_vec()],
            )
            .unwrap();
            let u = &reconstruct_eulerian(&st, &g, Method::Linear).unwrap()[0];
            let num: f64 = u.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
            (num / exact.iter().map(|v| v * v).sum::<f64>()).sqrt()
        };
        let (inc, val) = (err(Transfer::Increment), err(Transfer::Value));
        assert!(inc < 0.03, "increment transfer error {inc}");
        assert!(val > 10.0 * inc, "value transfer error {val}");
        assert_eq!(p.default_transfer(), Transfer::Increment);
    }
}
