//! Dataset recipes for the benchmark problems and the end-to-end pDMD
//! evaluation used by the CLI and the acceptance suite.

use std::f64::consts::PI;

use ndarray::{s, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{relative_l2_error, ErrorTable};
use crate::error::{invalid, Result};
use crate::fom::{self, exact, AdvectionDiffusionProblem1D, Problem2D, Transfer};
use crate::lagframe::{augmented_channels, ReconstructOptions, TanglePolicy};
use crate::pdmd::{fit_pdmd, reconstruct_set, Compressor, FieldLayout};
use crate::snapshot::{Frame, Grid, ParamSet, SnapshotSet, TimeAxis};

/// Characteristic RK4 substeps per recorded interval for the analytic Burgers data.
pub const BURGERS1D_RK4_SUBSTEPS: usize = 20;

/// Map `f` over `items` on up to `jobs` threads; output order follows `items`.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|sc| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| sc.spawn(move || c.iter().map(f).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

/// Inclusive `a:b:n` linspace.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn channels(frame: Frame, dim: usize, states: &[&str]) -> Result<Vec<String>> {
    match frame {
        Frame::Eulerian => Ok(states.iter().map(|s| s.to_string()).collect()),
        Frame::Lagrangian => Ok(augmented_channels(dim, states)),
        Frame::Latent => Err(invalid("recipes produce field data only")),
    }
}

/// Fill a set from a per-(param, time) snapshot closure writing channel-stacked values.
fn tabulate(
    grid: Grid,
    params: ParamSet,
    times: TimeAxis,
    frame: Frame,
    channels: Vec<String>,
    mut fill: impl FnMut(usize, usize, &mut [f64]),
) -> Result<SnapshotSet> {
    let (np, nt, nc, ns) = (params.len(), times.count, channels.len(), grid.len());
    let mut data = Array4::zeros((np, nt, nc, ns));
    let mut buf = vec![0.0; nc * ns];
    for p in 0..np {
        for k in 0..nt {
            fill(p, k, &mut buf);
            for c in 0..nc {
                data.slice_mut(s![p, k, c, ..]).assign(&ndarray::ArrayView1::from(&buf[c * ns..(c + 1) * ns]));
            }
        }
    }
    SnapshotSet::new(Some(grid), params, times, frame, channels, data)
}

/// Unit-speed transport of the narrow pulse on the periodic `[0, 2]`, 128 points.
/// Lagrangian snapshots carry the unwrapped `χ = x̂ + t`.
pub fn pulse_set(frame: Frame, times: &TimeAxis) -> Result<SnapshotSet> {
    let grid = Grid::new_1d(0.0, 2.0, 128, true)?;
    let x = grid.coords(0).to_vec();
    let profile = |y: f64, shift: f64| exact::periodic_translate(exact::pulse, y, shift, 2.0, 0.3);
    let ch = channels(frame, 1, &["u"])?;
    let n = x.len();
    tabulate(grid, ParamSet::scalar("c", &[1.0])?, *times, frame, ch, |_, k, out| {
        let t = times.time(k);
        match frame {
            Frame::Lagrangian => {
                for j in 0..n {
                    out[j] = x[j] + t;
                    out[n + j] = profile(x[j], 0.0);
                }
            }
            _ => {
                for j in 0..n {
                    out[j] = profile(x[j], t);
                }
            }
        }
    })
}

/// Jump `u = 1` for `x ≤ t` on `[0, 1]` with `t ∈ [0, 1]`. The Lagrangian
/// frame follows the nodes `χ = x̂ + t` carrying `u0(x̂)`.
pub fn jump_set(frame: Frame, n_space: usize, n_times: usize) -> Result<SnapshotSet> {
    let grid = Grid::new_1d(0.0, 1.0, n_space, false)?;
    let times = TimeAxis::new(0.0, 1.0 / (n_times.max(2) - 1) as f64, n_times)?;
    let x = grid.coords(0).to_vec();
    let ch = channels(frame, 1, &["u"])?;
    tabulate(grid, ParamSet::scalar("c", &[1.0])?, times, frame, ch, |_, k, out| {
        let t = times.time(k);
        let n = x.len();
        for j in 0..n {
            match frame {
                Frame::Lagrangian => {
                    out[j] = x[j] + t;
                    out[n + j] = exact::jump(x[j], 0.0);
                }
                _ => out[j] = exact::jump(x[j], t),
            }
        }
    })
}

fn gaussian_2d(x: f64, y: f64) -> f64 {
    (-((x - 2.0).powi(2) + (y - 2.0).powi(2)) / 0.1).exp()
}

/// Pure 2D transport of the Gaussian on the periodic `[0, 4]²` with `n²` nodes,
/// over `n_theta` directions in `[0, 2π]` and `n_times` instants in `[0, 1]`.
pub fn advection2d_set(frame: Frame, n: usize, n_theta: usize, n_times: usize) -> Result<SnapshotSet> {
    let grid = Grid::new_2d(0.0, 4.0, n, true)?;
    let times = TimeAxis::new(0.0, 1.0 / (n_times.max(2) - 1) as f64, n_times)?;
    let thetas = linspace(0.0, 2.0 * PI, n_theta);
    let (xs, ys) = (grid.mesh(0).to_vec(), grid.mesh(1).to_vec());
    let ch = channels(frame, 2, &["u"])?;
    let g1 = |z: f64| (-(z - 2.0).powi(2) / 0.1).exp();
    let per = |z: f64, shift: f64| exact::periodic_translate(g1, z, shift, 4.0, 2.0);
    tabulate(grid, ParamSet::scalar("theta", &thetas)?, times, frame, ch, |p, k, out| {
        let (t, th) = (times.time(k), thetas[p]);
        let m = xs.len();
        for j in 0..m {
            match frame {
                Frame::Lagrangian => {
                    out[j] = xs[j] + t * th.cos();
                    out[m + j] = ys[j] + t * th.sin();
                    out[2 * m + j] = gaussian_2d(xs[j], ys[j]);
                }
                _ => out[j] = per(xs[j], t * th.cos()) * per(ys[j], t * th.sin()),
            }
        }
    })
}

/// Analytic advection–diffusion of the window on `[0, 2]` (`n_space` nodes) for
/// `t ∈ [0, t_end]`. Along characteristics only the heat-kernel smoothing remains.
pub fn advdiff1d_set(frame: Frame, mu: f64, sigma0: f64, t_end: f64, n_space: usize, n_times: usize) -> Result<SnapshotSet> {
    let grid = Grid::new_1d(0.0, 2.0, n_space, false)?;
    let times = TimeAxis::new(0.0, t_end / (n_times.max(2) - 1) as f64, n_times)?;
    let x = grid.coords(0).to_vec();
    let ch = channels(frame, 1, &["u"])?;
    tabulate(grid, ParamSet::scalar("mu", &[mu])?, times, frame, ch, |_, k, out| {
        let t = times.time(k);
        let n = x.len();
        for j in 0..n {
            match frame {
                Frame::Lagrangian => {
                    out[j] = x[j] + t;
                    out[n + j] = exact::advdiff1d_exact_point(x[j] + t, t, mu, sigma0);
                }
                _ => out[j] = exact::advdiff1d_exact_point(x[j], t, mu, sigma0),
            }
        }
    })
}

/// Viscous Burgers data on `[0, 1.5]` from the closed form. Lagrangian nodes
/// follow the analytic velocity (RK4) and carry the closed form at their position.
pub fn burgers1d_set(frame: Frame, res: &[f64], times: &TimeAxis, n_space: usize) -> Result<SnapshotSet> {
    let grid = Grid::new_1d(0.0, 1.5, n_space, false)?;
    let x = grid.coords(0).to_vec();
    let ch = channels(frame, 1, &["u"])?;
    let n = x.len();
    let mut chi = x.clone();
    let mut last = (usize::MAX, 0usize);
    tabulate(grid, ParamSet::scalar("Re", res)?, *times, frame, ch, |p, k, out| {
        let (t, re) = (times.time(k), res[p]);
        match frame {
            Frame::Lagrangian => {
                if last.0 != p {
                    chi.copy_from_slice(&x);
                    exact::burgers1d_characteristics(&mut chi, 0.0, times.t0, re, BURGERS1D_RK4_SUBSTEPS);
                } else if last.1 + 1 == k {
                    exact::burgers1d_characteristics(&mut chi, times.time(k - 1), t, re, BURGERS1D_RK4_SUBSTEPS);
                }
                last = (p, k);
                out[..n].copy_from_slice(&chi);
                for j in 0..n {
                    out[n + j] = exact::burgers1d_exact_point(chi[j], t, re);
                }
            }
            _ => {
                for j in 0..n {
                    out[j] = exact::burgers1d_exact_point(x[j], t, re);
                }
            }
        }
    })
}

/// Full-order 1D solve for every row of `params`. Lagrangian runs use value
/// transfer unless `transfer` says otherwise.
#[allow(clippy::too_many_arguments)]
pub fn solve_1d_set(
    problem: &AdvectionDiffusionProblem1D,
    frame: Frame,
    grid: &Grid,
    params: &ParamSet,
    times: &TimeAxis,
    substeps: usize,
    transfer: Option<Transfer>,
    jobs: usize,
) -> Result<SnapshotSet> {
    let rows: Vec<Vec<f64>> = params.values().rows().into_iter().map(|r| r.to_vec()).collect();
    let sets = par_map(&rows, jobs, |mu| {
        let solved = match frame {
            Frame::Eulerian => fom::solve_eulerian_1d(problem, grid, times, substeps, mu),
            Frame::Lagrangian => {
                fom::solve_lagrangian_1d_with(problem, grid, times, substeps, mu, transfer.unwrap_or(Transfer::Value))
            }
            Frame::Latent => Err(invalid("cannot solve in the latent frame")),
        };
        solved.map(|(s, _)| s).map_err(|e| e.context(format!("{} at {mu:?}", problem.name)))
    });
    SnapshotSet::concat_params(&sets.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Full-order 2D solve for each problem instance, concatenated along parameters.
/// `transfer` overrides [`Problem2D::default_transfer`].
pub fn solve_2d_set(
    problems: &[Problem2D],
    frame: Frame,
    grid: &Grid,
    times: &TimeAxis,
    substeps: usize,
    transfer: Option<Transfer>,
    jobs: usize,
) -> Result<SnapshotSet> {
    let sets = par_map(problems, jobs, |p| {
        let solved = match frame {
            Frame::Eulerian => fom::solve_eulerian_2d(p, grid, times, substeps),
            Frame::Lagrangian => {
                fom::solve_lagrangian_2d_with(p, grid, times, substeps, transfer.unwrap_or(p.default_transfer()))
            }
            Frame::Latent => Err(invalid("cannot solve in the latent frame")),
        };
        solved.map(|(s, _)| s).map_err(|e| e.context(format!("{p:?}")))
    });
    SnapshotSet::concat_params(&sets.into_iter().collect::<Result<Vec<_>>>()?)
}

/// A train/test split ready for pDMD: training snapshots in the model frame and
/// Eulerian truth at the predicted instants.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub train: SnapshotSet,
    pub test_params: ParamSet,
    /// Eulerian truth for `test_params` at steps `1..=steps` past the training window.
    pub truth: SnapshotSet,
    pub target: Grid,
    pub reconstruct: ReconstructOptions,
    pub normalize: bool,
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub rank: usize,
    pub errors: ErrorTable,
    /// Predicted snapshots whose decoded Lagrangian grid was folded.
    pub tangled: usize,
}

impl Benchmark {
    pub fn frame(&self) -> Frame {
        self.train.frame()
    }

    pub fn steps(&self) -> usize {
        self.truth.n_times()
    }

    /// Train rank-`r` pDMD on the training window and score the predictions.
    pub fn evaluate(&self, r: usize) -> Result<BenchmarkRun> {
        Ok(self.evaluate_ranks(&[r])?.remove(0))
    }

    /// [`Benchmark::evaluate`] for several ranks sharing one POD factorization.
    pub fn evaluate_ranks(&self, ranks: &[usize]) -> Result<Vec<BenchmarkRun>> {
        let r_max = ranks.iter().copied().max().ok_or_else(|| invalid("no ranks requested"))?;
        let full = Compressor::fit_pod(&self.train, r_max, self.normalize)?;
        let layout = FieldLayout::of(&self.train)?;
        ranks
            .iter()
            .map(|&r| {
                let comp = full.truncate(r)?;
                let latents = comp.encode_set(&self.train)?;
                let model = fit_pdmd(&latents, comp, layout.clone())?;
                let (pred, tangled) = model.predict_fields(&self.test_params, self.steps(), &self.target, &self.reconstruct)?;
                let errors = relative_l2_error(&self.truth, &pred)?;
                Ok(BenchmarkRun { rank: r, errors, tangled })
            })
            .collect()
    }
}

fn split(name: &'static str, train_all: &SnapshotSet, test_all: &SnapshotSet, n_train: usize, target: Grid) -> Result<Benchmark> {
    let nt = test_all.n_times();
    if n_train < 2 || n_train >= nt {
        return Err(invalid(format!("training window of {n_train} snapshots out of {nt}")));
    }
    let dim = target.dim();
    let opts = ReconstructOptions::for_dim(dim).with_policy(TanglePolicy::Sort);
    let later = test_all.subset_time(n_train, nt - 1)?;
    let truth = match later.frame() {
        Frame::Eulerian => later,
        _ => reconstruct_set(&later, &target, &opts)?.0,
    };
    Ok(Benchmark {
        name,
        train: train_all.subset_time(0, n_train - 1)?,
        test_params: test_all.params().clone(),
        truth,
        target,
        reconstruct: opts,
        normalize: false,
    })
}

pub const BURGERS1D_TRAIN_RE: (f64, f64, usize) = (200.0, 600.0, 21);
pub const BURGERS1D_TEST_RE: [f64; 4] = [277.0, 315.0, 413.0, 572.0];

/// 1D Burgers: 21 training Reynolds numbers on `t ∈ [0, 3.2]`, prediction over
/// `(3.2, 4.0]` for four unseen values. Truth is the closed form.
pub fn burgers1d_benchmark(frame: Frame) -> Result<Benchmark> {
    let times = TimeAxis::new(0.0, 0.04, 101)?;
    let (a, b, n) = BURGERS1D_TRAIN_RE;
    let train = burgers1d_set(frame, &linspace(a, b, n), &times, 128)?;
    let test = burgers1d_set(Frame::Eulerian, &BURGERS1D_TEST_RE, &times, 128)?;
    let target = train.field_grid()?.clone();
    split("burgers1d", &train, &test, 81, target)
}

pub const ADVDIFF2D_DIFFUSION: f64 = 1e-3;

/// Test directions `2πk/7`, `k = 1..=6`.
pub fn advdiff2d_test_thetas() -> Vec<f64> {
    (1..=6).map(|k| 2.0 * PI * k as f64 / 7.0).collect()
}

/// 2D advection–diffusion on `[0, 4]²` with `n²` nodes: 30 training directions
/// over `t ∈ [0, 0.8]`, 20 prediction steps. Truth comes from the full-order
/// solver of the same frame.
pub fn advdiff2d_benchmark(frame: Frame, n: usize, jobs: usize) -> Result<Benchmark> {
    let grid = Grid::new_2d(0.0, 4.0, n, true)?;
    let times = TimeAxis::new(0.0, 0.01, 101)?;
    let prob = |theta| Problem2D::AdvectionDiffusion { theta, diffusion: ADVDIFF2D_DIFFUSION };
    let train: Vec<_> = linspace(0.0, 2.0 * PI, 30).into_iter().map(prob).collect();
    let test: Vec<_> = advdiff2d_test_thetas().into_iter().map(prob).collect();
    let train = solve_2d_set(&train, frame, &grid, &times, 1, None, jobs)?;
    let test = solve_2d_set(&test, frame, &grid, &times, 1, None, jobs)?;
    split("advdiff2d", &train, &test, 81, grid)
}

pub const BURGERS2D_NU: f64 = 0.01;
pub const BURGERS2D_SUBSTEPS: usize = 4;

/// `count` values drawn uniformly from `[lo, hi)` by a ChaCha8 stream seeded with `seed`.
pub fn uniform_params(seed: u64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(lo..hi)).collect()
}

/// `count` test amplitudes drawn uniformly from `[0.4, 0.8]`.
pub fn burgers2d_test_mus(seed: u64, count: usize) -> Vec<f64> {
    uniform_params(seed, 0.4, 0.8, count)
}

/// 2D Burgers on `[0, 5]²` with `n²` nodes, `Δt = 5e-3` recorded every fourth step:
/// 17 training amplitudes over `t ∈ [0, 1.8]`, 10 prediction steps for 8 seeded
/// random amplitudes.
pub fn burgers2d_benchmark(frame: Frame, n: usize, seed: u64, jobs: usize) -> Result<Benchmark> {
    let grid = Grid::new_2d(0.0, 5.0, n, true)?;
    let times = TimeAxis::new(0.0, 0.02, 101)?;
    let prob = |mu| Problem2D::Burgers { nu: BURGERS2D_NU, mu };
    let train: Vec<_> = (0..17).map(|i| prob(0.4 + 0.025 * i as f64)).collect();
    let test: Vec<_> = burgers2d_test_mus(seed, 8).into_iter().map(prob).collect();
    let train = solve_2d_set(&train, frame, &grid, &times, BURGERS2D_SUBSTEPS, None, jobs)?;
    let test = solve_2d_set(&test, frame, &grid, &times, BURGERS2D_SUBSTEPS, None, jobs)?;
    split("burgers2d", &train, &test, 91, grid)
}
