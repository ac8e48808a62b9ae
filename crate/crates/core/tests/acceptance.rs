//! Acceptance suite. One PASS/FAIL line per criterion, thresholds pinned.
//!
//! Runs without the libtest harness so every verdict line reaches stdout;
//! the process exits non-zero when any criterion fails. Positional
//! arguments filter criteria by substring.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::{s, Array1, Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lagrom::analysis::{coherence, nwidth_proxy, relative_l2_error, singular_value_decay};
use lagrom::dmd::fit_dmd;
use lagrom::experiments::{
    advdiff1d_set, advdiff2d_benchmark, advection2d_set, burgers1d_benchmark, burgers2d_benchmark, pulse_set,
};
use lagrom::fom::tridiag::Tridiagonal;
use lagrom::fom::{solve_eulerian_1d, AdvectionDiffusionProblem1D, Boundary};
use lagrom::io::{read_container, write_container};
use lagrom::lagframe::{stack, unstack, LagrangianState, ReconstructOptions};
use lagrom::pdmd::{fit_pdmd, reconstruct_set, Compressor, FieldLayout};
use lagrom::rbf::RbfInterpolant;
use lagrom::{Frame, Grid, ParamSet, SnapshotSet, TimeAxis};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> lagrom::Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

type Check = fn() -> lagrom::Result<Verdict>;

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: &[(&str, Duration, Check)] = &[
        ("advection1d_rank_collapse", secs(1), advection1d_rank_collapse),
        ("advection2d_rank_collapse", secs(5), advection2d_rank_collapse),
        ("advdiff1d_width_decay", secs(5), advdiff1d_width_decay),
        ("coherence_pulse", secs(1), coherence_pulse),
        ("dmd_exactness", secs(60), dmd_exactness),
        ("burgers1d_lag_pdmd", secs(120), burgers1d_lag_pdmd),
        ("advdiff2d_lag_pdmd", secs(600), advdiff2d_lag_pdmd),
        ("burgers2d_lag_pdmd_64", secs(300), burgers2d_lag_pdmd_64),
        ("property_suites", secs(60), property_suites),
        ("external_compressor_roundtrip", secs(60), external_compressor_roundtrip),
        ("pulse_reconstruction_from_exact_state", secs(60), pulse_reconstruction_from_exact_state),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, budget, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match outcome {
            Ok(Ok(v)) => (v.pass, v.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if elapsed > *budget {
            pass = false;
            detail.push_str(&format!("; over the {}s budget", budget.as_secs()));
        }
        println!("{} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
        failed += usize::from(!pass);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(n: u64) -> Duration {
    Duration::from_secs(n)
}

fn pct(v: f64) -> String {
    format!("{:.3}%", 100.0 * v)
}

fn advection1d_rank_collapse() -> lagrom::Result<Verdict> {
    let times = TimeAxis::new(0.0, 0.01, 101)?;
    let lag = singular_value_decay(&pulse_set(Frame::Lagrangian, &times)?)?;
    let eul = singular_value_decay(&pulse_set(Frame::Eulerian, &times)?)?;
    let (l3, e10) = (lag[2], eul[9]);
    verdict(l3 < 1e-10 && e10 > 1e-3, format!("lagrangian s3/s1={l3:.3e} (<1e-10), eulerian s10/s1={e10:.3e} (>1e-3)"))
}

fn advection2d_rank_collapse() -> lagrom::Result<Verdict> {
    let sv = singular_value_decay(&advection2d_set(Frame::Lagrangian, 32, 12, 12)?)?;
    verdict(sv[3] < 1e-10, format!("s4/s1={:.3e} (<1e-10)", sv[3]))
}

fn advdiff1d_width_decay() -> lagrom::Result<Verdict> {
    let set = advdiff1d_set(Frame::Lagrangian, 1e-4, 0.1, 1.0, 256, 101)?;
    let curve = nwidth_proxy(&set, 12)?;
    let q: f64 = 5.0 / 6.0;
    let c = curve.d_hat[3] / q;
    let mut worst: f64 = 0.0;
    for n in 3..=12 {
        worst = worst.max(curve.d_hat[n] / (c * q.powi(n as i32 - 2)));
    }
    verdict(worst <= 1.0, format!("max d_n/(C q^(n-2)) over n=3..12 is {worst:.3e} (<=1), d_12/d_0={:.3e}", curve.normalized()[12]))
}

fn coherence_pulse() -> lagrom::Result<Verdict> {
    let times = TimeAxis::new(0.0, 0.01, 101)?;
    let mut lines = Vec::new();
    let mut gammas = Vec::new();
    for frame in [Frame::Lagrangian, Frame::Eulerian] {
        let set = pulse_set(frame, &times)?;
        let g = coherence(&set.subset_time(0, 80)?, &set.subset_time(81, 100)?)?;
        lines.push(format!("{} min={:.4}", frame.as_str(), g.min()));
        gammas.push(g);
    }
    let eul_drop = gammas[1].gamma.iter().zip(&gammas[1].times).find(|(g, _)| **g < 0.5).map(|(_, t)| *t);
    let pass = gammas[0].min() > 0.99 && eul_drop.is_some();
    verdict(pass, format!("{} (>0.99), {}; eulerian below 0.5 at t={eul_drop:?}", lines[0], lines[1]))
}

fn dmd_exactness() -> lagrom::Result<Verdict> {
    let (n, r, steps) = (50, 5, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = lagrom::linalg::svd(Array2::from_shape_fn((n, r), |_| rng.random_range(-1.0..1.0)).view())?.u;
    let q = q.slice(s![.., ..r]).to_owned();
    let rot = |rho: f64, a: f64| [[rho * a.cos(), -rho * a.sin()], [rho * a.sin(), rho * a.cos()]];
    let mut m = Array2::<f64>::zeros((r, r));
    for (off, blk) in [(0, rot(0.95, 0.3)), (2, rot(0.9, 0.8))] {
        for i in 0..2 {
            for j in 0..2 {
                m[[off + i, off + j]] = blk[i][j];
            }
        }
    }
    m[[4, 4]] = 0.8;
    let n_snap = 30;
    let mut h = Array1::from_shape_fn(r, |_| rng.random_range(-1.0..1.0));
    let mut traj = Array2::zeros((n, n_snap + steps));
    for k in 0..n_snap + steps {
        traj.column_mut(k).assign(&q.dot(&h));
        h = m.dot(&h);
    }
    let op = fit_dmd(traj.slice(s![.., ..n_snap]), r)?;
    let rho = op.spectral_radius()?;
    let last = traj.column(n_snap - 1);
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        let pred = op.predict(last, k)?;
        let truth = traj.column(n_snap - 1 + k);
        let err = (&pred - &truth).mapv(|v| v * v).sum().sqrt() / truth.mapv(|v| v * v).sum().sqrt();
        worst = worst.max(err);
    }
    verdict(worst < 1e-8, format!("max relative error over {steps} steps {worst:.3e} (<1e-8), fitted spectral radius {rho:.6}"))
}

fn burgers1d_lag_pdmd() -> lagrom::Result<Verdict> {
    let ranks = [6, 8, 10, 12, 14];
    let lag = burgers1d_benchmark(Frame::Lagrangian)?.evaluate_ranks(&ranks)?;
    let eul = burgers1d_benchmark(Frame::Eulerian)?.evaluate_ranks(&ranks)?;
    let mut ordered = true;
    let mut table = Vec::new();
    for (l, e) in lag.iter().zip(&eul) {
        ordered &= l.errors.mean() < e.errors.mean();
        table.push(format!("r={} lag {} eul {}", l.rank, pct(l.errors.mean()), pct(e.errors.mean())));
    }
    let r14 = lag.last().map(|run| run.errors.mean()).unwrap_or(f64::NAN);
    verdict(
        r14 < 0.05 && ordered,
        format!("r=14 lagrangian {} (<5%), lagrangian below eulerian at every r: {ordered}; {}", pct(r14), table.join(", ")),
    )
}

fn advdiff2d_lag_pdmd() -> lagrom::Result<Verdict> {
    let lag = advdiff2d_benchmark(Frame::Lagrangian, 40, 1)?.evaluate_ranks(&[4, 6, 8, 10])?;
    let eul = advdiff2d_benchmark(Frame::Eulerian, 40, 1)?.evaluate(6)?;
    let worst = lag.iter().map(|run| run.errors.mean()).fold(0.0, f64::max);
    let table: Vec<String> = lag.iter().map(|run| format!("r={} {}", run.rank, pct(run.errors.mean()))).collect();
    let e6 = eul.errors.mean();
    verdict(
        worst < 0.05 && e6 > 0.5,
        format!("lagrangian max {} (<5%) [{}], eulerian r=6 {} (>50%)", pct(worst), table.join(", "), pct(e6)),
    )
}

fn burgers2d_lag_pdmd_64() -> lagrom::Result<Verdict> {
    let run = burgers2d_benchmark(Frame::Lagrangian, 64, 0, 1)?.evaluate(12)?;
    let e = run.errors.mean();
    verdict(e < 0.01, format!("r=12 seed 0 mean error {} (<1%), tangled predictions {}", pct(e), run.tangled))
}

/// Seeded random trials of the named invariants.
fn property_suites() -> lagrom::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = Vec::new();
    let trials = 25;
    for trial in 0..trials {
        // stack/unstack bijection
        let n = rng.random_range(4..40);
        let g = Grid::new_1d(0.0, 1.0, n, false)?;
        let chi: Vec<f64> = (0..n).map(|j| g.node(0, j) + rng.random_range(-0.1..0.1) / n as f64).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let state = LagrangianState::new(g.clone(), vec![chi], vec![u])?;
        if unstack(&stack(&state), &g)? != state {
            failures.push(format!("stack/unstack trial {trial}"));
        }

        // container round trip
        let (np, nt, nc) = (rng.random_range(1..4), rng.random_range(1..6), rng.random_range(1..3));
        let data = Array4::from_shape_fn((np, nt, nc, n), |_| rng.random_range(-1e3..1e3));
        let params = ParamSet::scalar("mu", &(0..np).map(|i| i as f64 + 0.5).collect::<Vec<_>>())?;
        let names = (0..nc).map(|c| format!("q{c}")).collect();
        let set = SnapshotSet::new(Some(g.clone()), params, TimeAxis::new(0.0, 0.1, nt)?, Frame::Eulerian, names, data)?;
        let dir = tempfile::tempdir().map_err(lagrom::Error::from)?;
        let path = dir.path().join("c.lrom");
        write_container(&set, &path)?;
        if read_container(&path)? != set {
            failures.push(format!("container trial {trial}"));
        }

        // flux conservation on a periodic grid
        let gp = Grid::new_1d(0.0, 1.0, n, true)?;
        let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v2 = vals.clone();
        let mut p = AdvectionDiffusionProblem1D::linear_advection(
            std::sync::Arc::new(move |x: f64, _: &[f64]| v2[((x * n as f64).round() as usize).min(n - 1)]),
            Boundary::Periodic,
        );
        p.boundary = Boundary::Periodic;
        let dt = rng.random_range(0.1..1.0) * gp.spacing(0);
        let (sol, _) = solve_eulerian_1d(&p, &gp, &TimeAxis::new(0.0, dt, 20)?, 1, &[1.0])?;
        let mass0: f64 = sol.snapshot(0, 0).sum();
        let mass1: f64 = sol.snapshot(0, 19).sum();
        let scale = vals.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        if (mass1 - mass0).abs() > 1e-12 * scale {
            failures.push(format!("conservation trial {trial}: drift {:.3e}", mass1 - mass0));
        }

        // implicit-solve residual
        let cyclic = trial % 2 == 0;
        let k = rng.random_range(0.01..10.0);
        let tri = Tridiagonal { lower: vec![-k; n], diag: vec![1.0 + 2.0 * k; n], upper: vec![-k; n], cyclic };
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = tri.solve(&rhs)?;
        let res = tri.relative_residual(&x, &rhs);
        if res > 1e-12 {
            failures.push(format!("implicit residual trial {trial}: {res:.3e}"));
        }

        // RBF nodal interpolation
        let m = rng.random_range(4..16);
        let nodes = Array2::from_shape_fn((m, 2), |(i, j)| (i as f64 + rng.random_range(0.0..0.5)) * if j == 0 { 1.0 } else { -0.7 });
        let vals = Array2::from_shape_fn((m, 1), |_| rng.random_range(-10.0..10.0));
        let f = RbfInterpolant::new(nodes.view(), vals.view())?;
        for i in 0..m {
            let v = f.eval(&[nodes[[i, 0]], nodes[[i, 1]]])?[0];
            if (v - vals[[i, 0]]).abs() > 1e-8 * 10.0 {
                failures.push(format!("rbf trial {trial} node {i}"));
            }
        }

        // error-metric identities
        let same = relative_l2_error(&set, &set)?;
        let zero = SnapshotSet::new(
            Some(g.clone()),
            set.params().clone(),
            *set.times(),
            Frame::Eulerian,
            set.channels().to_vec(),
            Array4::zeros(set.data().dim()),
        )?;
        let all_zero = relative_l2_error(&set, &zero)?;
        if same.mean() != 0.0 || (all_zero.mean() - 1.0).abs() > 1e-15 {
            failures.push(format!("error identities trial {trial}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{trials} seeded trials each of stack/unstack, container round trip, conservation, implicit residual, RBF nodes, error identities")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

/// The external compressor path, fed by a latent container written from POD.
fn external_compressor_roundtrip() -> lagrom::Result<Verdict> {
    let times = TimeAxis::new(0.0, 0.05, 30)?;
    let res: Vec<f64> = (0..6).map(|i| 200.0 + 80.0 * i as f64).collect();
    let train = lagrom::experiments::burgers1d_set(Frame::Lagrangian, &res, &times, 64)?;
    let pod = Compressor::fit_pod(&train, 8, false)?;
    let latents = pod.encode_set(&train)?;
    let dir = tempfile::tempdir().map_err(lagrom::Error::from)?;
    let path = dir.path().join("latents.lrom");
    write_container(&latents, &path)?;
    let loaded = read_container(&path)?;
    let layout = FieldLayout::of(&train)?;
    let external = fit_pdmd(&loaded, Compressor::external(path.display().to_string(), 8), layout.clone())?;
    let internal = fit_pdmd(&latents, pod, layout)?;
    let mu = [333.0];
    let a = external.predict_steps(&mu, 10)?;
    let b = internal.predict_steps(&mu, 10)?;
    let diff = (&a - &b).mapv(f64::abs).fold(0.0, |m: f64, v| m.max(*v));
    let decode_refused = external.decode(a.row(0)).is_err();
    verdict(
        diff == 0.0 && decode_refused && loaded.shape() == vec![6, 30, 8],
        format!("latent shape {:?}, max |external - pod| latent difference {diff:.1e}, decode deferred to the external tool: {decode_refused}", loaded.shape()),
    )
}

/// Reconstruct the exact Lagrangian pulse state and compare with the analytic translate.
fn pulse_reconstruction_from_exact_state() -> lagrom::Result<Verdict> {
    let times = TimeAxis::new(0.0, 0.01, 101)?;
    let lag = pulse_set(Frame::Lagrangian, &times)?;
    let eul = pulse_set(Frame::Eulerian, &times)?;
    let grid = eul.field_grid()?.clone();
    let (rec, _) = reconstruct_set(&lag, &grid, &ReconstructOptions::for_dim(1))?;
    let errs = relative_l2_error(&eul, &rec)?;
    let per_time = errs.per_time();
    let worst = per_time.iter().copied().fold(0.0, f64::max);
    verdict(
        worst <= 1e-2,
        format!(
            "max relative error over t in [0,1] {} (<=1%), {:.1e} at t=0; pulse width 0.005 is below the grid spacing {:.4}",
            pct(worst),
            per_time[0],
            grid.spacing(0)
        ),
    )
}
