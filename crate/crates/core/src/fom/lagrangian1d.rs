use super::euler1d::{check_setup, implicit_diffusion, nodal_diffusion, single_param_set};
use super::{check_finite, AdvectionDiffusionProblem1D, SolveReport, Transfer, CFL_SLACK};
use crate::error::{Error, Result};
use crate::lagframe::interp::{grid_to_points_1d, nodes_to_grid_1d};
use crate::lagframe::{augmented_channels, min_gap_1d, tangled};
use crate::snapshot::{Frame, Grid, SnapshotSet, TimeAxis};

/// Lagrangian solve: nodes start on the grid and move with `f(u)` by the
/// trapezoidal rule; each step the state is interpolated to the
/// Eulerian grid, diffused implicitly there and interpolated back. Channels are `["chi", "u"]`, χ unwrapped.
pub fn solve_lagrangian_1d(
    p: &AdvectionDiffusionProblem1D,
    g: &Grid,
    times: &TimeAxis,
    substeps: usize,
    mu: &[f64],
) -> Result<(SnapshotSet, SolveReport)> {
    solve_lagrangian_1d_with(p, g, times, substeps, mu, Transfer::Value)
}

pub fn solve_lagrangian_1d_with(
    p: &AdvectionDiffusionProblem1D,
    g: &Grid,
    times: &TimeAxis,
    substeps: usize,
    mu: &[f64],
    transfer: Transfer,
) -> Result<(SnapshotSet, SolveReport)> {
    check_setup(p, g, substeps, mu)?;
    let dx = g.spacing(0);
    let dt = times.dt / substeps as f64;
    let mut chi = g.coords(0).to_vec();
    let mut u: Vec<f64> = chi.iter().map(|&x| (p.initial)(x, mu)).collect();
    check_finite(&u, 0)?;
    let mut report = SolveReport { min_gap: Some(min_gap_1d(&chi, g)), ..Default::default() };
    let mut frames = vec![vec![chi.clone(), u.clone()]];
    let mut step = 0;
    for k in 1..times.count {
        for s in 0..substeps {
            step += 1;
            let t_new = times.time(k - 1) + (s + 1) as f64 * dt;
            let f_old: Vec<f64> = u.iter().map(|&v| (p.speed)(v, mu)).collect();
            let fmax = f_old.iter().map(|v| v.abs()).fold(0.0, f64::max);
            report.cfl.max_speed = report.cfl.max_speed.max(fmax);
            report.cfl.advective = report.cfl.advective.max(dt * fmax / dx);
            if dt * fmax / dx > 1.0 + CFL_SLACK {
                return Err(Error::Stability { step, report: report.cfl });
            }
            let u_e = nodes_to_grid_1d(&chi, &u, g)?;
            let (d, ghost) = nodal_diffusion(p, g, t_new, &u_e, mu)?;
            let dmax = d.iter().copied().fold(0.0, f64::max);
            report.cfl.diffusive = report.cfl.diffusive.max(dmax * dt / (dx * dx));
            if dmax > 0.0 || ghost.0 > 0.0 || ghost.1 > 0.0 {
                let (u_e_new, res) = implicit_diffusion(&u_e, &d, ghost, p.boundary, dt, dx)?;
                report.max_residual = report.max_residual.max(res);
                match transfer {
                    Transfer::Value => u = grid_to_points_1d(&u_e_new, g, &chi),
                    Transfer::Increment => {
                        let inc: Vec<f64> = u_e_new.iter().zip(&u_e).map(|(a, b)| a - b).collect();
                        for (v, d) in u.iter_mut().zip(grid_to_points_1d(&inc, g, &chi)) {
                            *v += d;
                        }
                    }
                }
            }
            check_finite(&u, step)?;
            for (j, c) in chi.iter_mut().enumerate() {
                *c += 0.5 * dt * (f_old[j] + (p.speed)(u[j], mu));
            }
            check_finite(&chi, step)?;
            let gap = min_gap_1d(&chi, g);
            report.min_gap = Some(report.min_gap.map_or(gap, |m: f64| m.min(gap)));
            if tangled(gap, g) {
                return Err(Error::Tangled { step: Some(step), min_gap: gap });
            }
        }
        frames.push(vec![chi.clone(), u.clone()]);
    }
    report.steps = step;
    let set = single_param_set(&p.param_names, mu, g, times, Frame::Lagrangian, augmented_channels(1, &["u"]), frames)?;
    Ok((set, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fom::{exact, solve_eulerian_1d, Boundary};
    use crate::lagframe::{reconstruct_eulerian, LagrangianState, Method};
    use std::sync::Arc;

    #[test]
    fn constant_velocity_characteristics_exact() {
        let p = AdvectionDiffusionProblem1D::pulse_advection();
        let g = Grid::new_1d(0.0, 2.0, 128, true).unwrap();
        let t = TimeAxis::new(0.0, 0.01, 101).unwrap();
        let (s, r) = solve_lagrangian_1d(&p, &g, &t, 1, &[1.0]).unwrap();
        let x = g.coords(0);
        let u0 = s.channel(0, 0, 1).to_owned();
        for k in 0..101 {
            let chi = s.channel(0, k, 0);
            for j in 0..128 {
                assert!((chi[j] - (x[j] + t.time(k))).abs() < 1e-13);
            }
            assert_eq!(s.channel(0, k, 1), u0);
        }
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn inviscid_burgers_values_constant_on_characteristics() {
        let mut p = AdvectionDiffusionProblem1D::burgers_viscous();
        p.diffusion = Arc::new(|_, _, _, _| 0.0);
        p.boundary = Boundary::Periodic;
        p.initial = Arc::new(|x, _| 0.5 + 0.2 * (std::f64::consts::PI * x).sin());
        let g = Grid::new_1d(0.0, 2.0, 64, true).unwrap();
        let t = TimeAxis::new(0.0, 0.02, 30).unwrap();
        let (s, _) = solve_lagrangian_1d(&p, &g, &t, 1, &[100.0]).unwrap();
        assert_eq!(s.channel(0, 29, 1), s.channel(0, 0, 1));
    }

    fn lag_error_vs_exact(n: usize, sub: usize) -> f64 {
        let p = AdvectionDiffusionProblem1D::burgers_viscous();
        let g = Grid::new_1d(0.0, 1.5, n, false).unwrap();
        let t = TimeAxis::new(0.0, 0.25, 5).unwrap();
        let (s, _) = solve_lagrangian_1d(&p, &g, &t, sub, &[200.0]).unwrap();
        let st = LagrangianState::new(g.clone(), vec![s.channel(0, 4, 0).to_vec()], vec![s.channel(0, 4, 1).to_vec()]).unwrap();
        let rec = reconstruct_eulerian(&st, &g, Method::Linear).unwrap();
        let truth = exact::burgers1d_exact(&g.coords(0).to_vec(), 1.0, 200.0);
        let num: f64 = rec[0].iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = truth.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }

    #[test]
    fn viscous_burgers_agrees_with_closed_form() {
        let e1 = lag_error_vs_exact(128, 25);
        let e2 = lag_error_vs_exact(256, 50);
        assert!(e1 < 0.1 && e2 < 0.6 * e1, "{e1} {e2}");
    }

    #[test]
    fn eulerian_and_lagrangian_converge_to_diffused_window() {
        let p = AdvectionDiffusionProblem1D::window_advection_diffusion(0.1);
        let mut eul = Vec::new();
        let mut lag = Vec::new();
        for &n in &[100usize, 200, 400] {
            let g = Grid::new_1d(0.0, 2.0, n, true).unwrap();
            let t = TimeAxis::new(0.0, 0.3, 2).unwrap();
            let sub = n * 3 / 10;
            let truth = exact::advdiff1d_exact(&g.coords(0).to_vec(), 0.3, 1e-3, 0.1);
            let norm = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (se, _) = solve_eulerian_1d(&p, &g, &t, sub, &[1e-3]).unwrap();
            let ue = se.channel(0, 1, 0);
            eul.push(ue.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm);
            let (sl, _) = solve_lagrangian_1d(&p, &g, &t, sub, &[1e-3]).unwrap();
            let st = LagrangianState::new(g.clone(), vec![sl.channel(0, 1, 0).to_vec()], vec![sl.channel(0, 1, 1).to_vec()]).unwrap();
            let ul = reconstruct_eulerian(&st, &g, Method::Linear).unwrap();
            lag.push(ul[0].iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / norm);
        }
        assert!(eul[1] < eul[0] && eul[2] < eul[1], "{eul:?}");
        assert!(lag[1] < lag[0] && lag[2] < lag[1], "{lag:?}");
    }
}
