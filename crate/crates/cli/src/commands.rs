use std::path::Path;

use ndarray::{s, Array4};

use lagrom::analysis::{self, relative_l2_error};
use lagrom::experiments::{self, burgers1d_set, solve_1d_set, solve_2d_set};
use lagrom::fom::{AdvectionDiffusionProblem1D, Problem2D};
use lagrom::io::{self, read_container, read_model, write_container, write_error_table, write_model};
use lagrom::lagframe::ReconstructOptions;
use lagrom::pdmd::{fit_pdmd, fit_pdmd_pod, latent_channels, reconstruct_set, Compressor, CompressorKind, FieldLayout};
use lagrom::{Frame, Grid, ParamSet, Result, SnapshotSet, TimeAxis};

use crate::params::{grid_points, interval, invalid, resolve};
use crate::{
    CoherenceArgs, EncodeArgs, FomArgs, NwidthArgs, PredictArgs, Problem, ReconstructArgs, SvdArgs, TrainArgs,
};

struct ProblemInfo {
    dim: usize,
    param: &'static str,
    domain: (f64, f64),
    periodic: bool,
    substeps: usize,
}

fn info(p: Problem) -> ProblemInfo {
    let (dim, param, domain, periodic, substeps) = match p {
        Problem::Adv1d => (1, "c", (0.0, 2.0), true, 1),
        Problem::Burgers1d => (1, "Re", (0.0, 1.5), false, 1),
        Problem::Advdiff1d => (1, "mu", (0.0, 2.0), true, 1),
        Problem::Advdiff2d => (2, "theta", (0.0, 4.0), true, 1),
        Problem::Burgers2d => (2, "mu", (0.0, 5.0), true, experiments::BURGERS2D_SUBSTEPS),
    };
    ProblemInfo { dim, param, domain, periodic, substeps }
}

fn time_axis(tmax: f64, dt: Option<f64>, snapshots: Option<usize>) -> Result<TimeAxis> {
    if !(tmax > 0.0) {
        return Err(invalid("--tmax must be positive"));
    }
    match (dt, snapshots) {
        (Some(dt), _) => {
            if !(dt > 0.0) {
                return Err(invalid("--dt must be positive"));
            }
            let steps = (tmax / dt).round();
            if (steps * dt - tmax).abs() > 1e-9 * tmax {
                return Err(invalid(format!("--tmax {tmax} is not a multiple of --dt {dt}")));
            }
            TimeAxis::new(0.0, dt, steps as usize + 1)
        }
        (None, Some(k)) if k >= 2 => TimeAxis::new(0.0, tmax / (k - 1) as f64, k),
        _ => Err(invalid("--snapshots must be at least 2")),
    }
}

pub fn fom(a: &FomArgs) -> Result<()> {
    let pi = info(a.problem);
    let params = resolve(&a.params, pi.param, a.seed)?;
    if params.dim() != 1 {
        return Err(invalid(format!("{:?} takes one parameter per point, got {}", a.problem, params.dim())));
    }
    let mus = params.values().column(0).to_vec();
    let points = grid_points(&a.grid)?;
    if points.len() != pi.dim {
        return Err(invalid(format!("--grid '{}' does not describe a {}D grid", a.grid, pi.dim)));
    }
    let domain = match &a.domain {
        Some(d) => interval(d)?,
        None => pi.domain,
    };
    let grid = Grid::new(vec![domain; pi.dim], points.clone(), vec![pi.periodic; pi.dim])?;
    let times = time_axis(a.tmax, a.dt, a.snapshots)?;
    let frame: Frame = a.frame.into();
    let substeps = a.substeps.unwrap_or(pi.substeps);
    let transfer = a.transfer.map(Into::into);
    let jobs = a.jobs.max(1);
    let set = match a.problem {
        Problem::Burgers1d => {
            if domain != pi.domain {
                return Err(invalid("burgers1d data is tabulated on [0, 1.5]"));
            }
            if transfer.is_some() {
                log::warn!("burgers1d data is analytic; --transfer has no effect");
            }
            burgers1d_set(frame, &mus, &times, points[0])?
        }
        Problem::Adv1d | Problem::Advdiff1d => {
            let p = if a.problem == Problem::Adv1d {
                AdvectionDiffusionProblem1D::pulse_advection()
            } else {
                AdvectionDiffusionProblem1D::window_advection_diffusion(a.sigma0)
            };
            let params = ParamSet::scalar(pi.param, &mus)?;
            solve_1d_set(&p, frame, &grid, &params, &times, substeps, transfer, jobs)?
        }
        Problem::Advdiff2d | Problem::Burgers2d => {
            let problems: Vec<Problem2D> = mus
                .iter()
                .map(|&mu| match a.problem {
                    Problem::Advdiff2d => Problem2D::AdvectionDiffusion { theta: mu, diffusion: a.diffusion },
                    _ => Problem2D::Burgers { nu: a.nu, mu },
                })
                .collect();
            let set = solve_2d_set(&problems, frame, &grid, &times, substeps, transfer, jobs)?;
            let data = set.data().clone();
            SnapshotSet::new(set.grid().cloned(), ParamSet::scalar(pi.param, &mus)?, *set.times(), frame, set.channels().to_vec(), data)?
        }
    };
    write_container(&set, &a.out)?;
    println!("wrote {} container {:?} to {}", set.frame().as_str(), set.shape(), a.out.display());
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut fields = read_container(&a.input)?;
    if let Some(k) = a.snapshots {
        fields = window(&fields, k)?;
    }
    let model = if a.compressor == "pod" {
        let r = a.rank.ok_or_else(|| invalid("--rank is required for the pod compressor"))?;
        fit_pdmd_pod(&fields, r, a.normalize)?
    } else if let Some(src) = a.compressor.strip_prefix("external:") {
        if a.normalize {
            return Err(invalid("--normalize applies to the pod compressor only"));
        }
        let mut latents = read_container(Path::new(src))?;
        if let Some(k) = a.snapshots {
            latents = window(&latents, k)?;
        }
        if latents.params() != fields.params() || latents.n_times() != fields.n_times() {
            return Err(invalid("external latents and training fields disagree in parameters or snapshot count"));
        }
        let r = latents.n_channels();
        if a.rank.is_some_and(|q| q != r) {
            return Err(invalid(format!("external latents have width {r}, --rank asks for {}", a.rank.unwrap_or(0))));
        }
        fit_pdmd(&latents, Compressor::external(src, r), FieldLayout::of(&fields)?)?
    } else {
        return Err(invalid(format!("unknown compressor '{}' (pod, external:<path>)", a.compressor)));
    };
    write_model(&model, &a.out)?;
    let worst = model.residuals.iter().copied().fold(0.0, f64::max);
    println!(
        "trained rank-{} {} pDMD on {} parameters x {} snapshots; max one-step residual {worst:.3e}",
        model.rank(),
        model.compressor.name(),
        model.params.len(),
        model.times.count
    );
    Ok(())
}

fn window(s: &SnapshotSet, k: usize) -> Result<SnapshotSet> {
    if k < 2 || k > s.n_times() {
        return Err(invalid(format!("--snapshots {k} outside 2..={}", s.n_times())));
    }
    s.subset_time(0, k - 1)
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let name = model.params.names().first().cloned().unwrap_or_else(|| "mu".into());
    let mus = resolve(&a.params, &name, a.seed)?;
    if a.steps == 0 {
        return Err(invalid("--steps must be at least 1"));
    }
    if let CompressorKind::External { source } = &model.compressor.kind {
        if a.truth.is_some() {
            return Err(invalid("external models predict latents; decode them and score with `reconstruct --truth`"));
        }
        let r = model.rank();
        let mut data = Array4::zeros((mus.len(), a.steps, r, 1));
        for p in 0..mus.len() {
            let lat = model.predict_steps(&mus.row(p).to_vec(), a.steps)?;
            for k in 0..a.steps {
                data.slice_mut(s![p, k, .., 0]).assign(&lat.row(k));
            }
        }
        let times = TimeAxis::new(model.times.end() + model.times.dt, model.times.dt, a.steps)?;
        let mut extra = serde_json::Map::new();
        extra.insert("compressor".into(), "external".into());
        extra.insert("source".into(), source.clone().into());
        extra.insert("source_frame".into(), model.layout.frame.as_str().into());
        let set = SnapshotSet::new(None, mus, times, Frame::Latent, latent_channels(r), data)?.with_extra(extra);
        write_container(&set, &a.out)?;
        println!("wrote latent predictions {:?} to {}", set.shape(), a.out.display());
        return Ok(());
    }
    let target = model.layout.grid.clone();
    let opts = a.reconstruct.options(target.dim());
    let (pred, tangled) = model.predict_fields(&mus, a.steps, &target, &opts)?;
    if tangled > 0 {
        log::warn!("{tangled} predicted snapshots had folded Lagrangian grids");
    }
    write_container(&pred, &a.out)?;
    println!("wrote predictions {:?} to {}", pred.shape(), a.out.display());
    if let Some(t) = &a.truth {
        score(&pred, t, a.errors.as_deref(), &opts)?;
    }
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let set = read_container(&a.input)?;
    if set.frame() != Frame::Lagrangian {
        return Err(invalid(format!("expected a lagrangian container, got {}", set.frame().as_str())));
    }
    let target = set.field_grid()?.clone();
    let opts = a.reconstruct.options(target.dim());
    let (eul, tangled) = reconstruct_set(&set, &target, &opts)?;
    if tangled > 0 {
        log::warn!("{tangled} snapshots had folded Lagrangian grids");
    }
    write_container(&eul, &a.out)?;
    println!("wrote eulerian container {:?} to {}", eul.shape(), a.out.display());
    if let Some(t) = &a.truth {
        score(&eul, t, a.errors.as_deref(), &opts)?;
    }
    Ok(())
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Relative L² errors of `pred` against the matching parameters and instants of a truth container.
fn score(pred: &SnapshotSet, truth: &Path, errors: Option<&Path>, opts: &ReconstructOptions) -> Result<()> {
    let mut truth = read_container(truth)?;
    let rows = (0..pred.n_params())
        .map(|p| {
            let mu = pred.params().row(p);
            (0..truth.n_params())
                .find(|&q| truth.params().row(q).iter().zip(mu.iter()).all(|(x, y)| same(*x, *y)))
                .ok_or_else(|| invalid(format!("truth has no parameter {:?}", mu.to_vec())))
        })
        .collect::<Result<Vec<_>>>()?;
    truth = truth.subset_params(&rows)?;
    let (tt, pt) = (truth.times(), pred.times());
    let k0 = (0..tt.count)
        .find(|&k| same(tt.time(k), pt.t0))
        .ok_or_else(|| invalid(format!("truth has no snapshot at t = {}", pt.t0)))?;
    if !same(tt.dt, pt.dt) || k0 + pt.count > tt.count {
        return Err(invalid("truth does not cover the predicted instants"));
    }
    truth = truth.subset_time(k0, k0 + pt.count - 1)?;
    if truth.frame() == Frame::Lagrangian {
        truth = reconstruct_set(&truth, pred.field_grid()?, opts)?.0;
    }
    let table = relative_l2_error(&truth, pred)?;
    for (p, e) in table.per_param().iter().enumerate() {
        println!("{:?}: mean relative error {e:.6e}", table.params.row(p).to_vec());
    }
    println!("mean relative error {:.6e}", table.mean());
    if let Some(path) = errors {
        write_error_table(&table, path)?;
    }
    Ok(())
}

pub fn encode(a: &EncodeArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let fields = read_container(&a.input)?;
    if FieldLayout::of(&fields)? != model.layout {
        return Err(invalid("container layout differs from the model's training layout"));
    }
    let latents = model.compressor.encode_set(&fields)?;
    write_container(&latents, &a.out)?;
    println!("wrote latent container {:?} to {}", latents.shape(), a.out.display());
    Ok(())
}

pub fn coherence(a: &CoherenceArgs) -> Result<()> {
    let mut train = read_container(&a.input)?;
    let mut eval = match &a.eval {
        Some(p) => read_container(p)?,
        None => train.clone(),
    };
    if let Some(k) = a.split {
        if k == 0 || k >= eval.n_times() || k > train.n_times() {
            return Err(invalid(format!("--split {k} leaves nothing to train on or evaluate")));
        }
        train = train.subset_time(0, k - 1)?;
        eval = eval.subset_time(k, eval.n_times() - 1)?;
    }
    if a.param >= eval.n_params() {
        return Err(invalid(format!("--param {} out of range for {} parameters", a.param, eval.n_params())));
    }
    let series = analysis::coherence(&train, &eval.subset_params(&[a.param])?)?;
    io::write_coherence(&series, &a.out)?;
    println!("min coherence {:.6}", series.min());
    Ok(())
}

pub fn nwidth(a: &NwidthArgs) -> Result<()> {
    let set = read_container(&a.input)?;
    let samples = set.n_params() * set.n_times();
    if a.n_max > samples {
        return Err(invalid(format!("--n-max {} exceeds the {samples} samples", a.n_max)));
    }
    let curve = analysis::nwidth_proxy(&set, a.n_max)?;
    io::write_nwidth(&curve, &a.out)?;
    println!("d_hat_{}/d_hat_0 = {:.6e}", a.n_max, curve.normalized().last().copied().unwrap_or(0.0));
    Ok(())
}

pub fn svd(a: &SvdArgs) -> Result<()> {
    let set = read_container(&a.input)?;
    let s = analysis::singular_value_decay(&set)?;
    io::write_spectrum(&s, &a.out)?;
    println!("numerical rank {}", s.iter().filter(|v| **v > analysis::RANK_TOL).count());
    Ok(())
}
