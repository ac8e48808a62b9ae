//! `lagrom`: full-order data, pDMD training and prediction, and the frame
//! diagnostics, all exchanged through containers and CSV.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lagrom::fom::Transfer;
use lagrom::lagframe::{Method, TanglePolicy};
use lagrom::Frame;

#[derive(Parser, Debug)]
#[command(name = "lagrom", version, about = "Eulerian and Lagrangian reduced-order models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a snapshot container from a full-order problem.
    Fom(FomArgs),
    /// Fit a pDMD model on a training container.
    Train(TrainArgs),
    /// Predict past the training window, optionally scoring against a truth container.
    Predict(PredictArgs),
    /// Map decoded Lagrangian snapshots onto the Eulerian grid.
    Reconstruct(ReconstructArgs),
    /// Encode a field container with a trained POD model.
    Encode(EncodeArgs),
    /// Maximal normalized correlation of later snapshots against a training window.
    Coherence(CoherenceArgs),
    /// Worst-sample POD projection error by subspace dimension.
    Nwidth(NwidthArgs),
    /// Normalized singular values of the global snapshot matrix.
    Svd(SvdArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Adv1d,
    Burgers1d,
    Advdiff1d,
    Advdiff2d,
    Burgers2d,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FrameArg {
    Eulerian,
    Lagrangian,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Eulerian => Frame::Eulerian,
            FrameArg::Lagrangian => Frame::Lagrangian,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum TransferArg {
    Value,
    Increment,
}

impl From<TransferArg> for Transfer {
    fn from(t: TransferArg) -> Transfer {
        match t {
            TransferArg::Value => Transfer::Value,
            TransferArg::Increment => Transfer::Increment,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MethodArg {
    Rbf,
    Linear,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum TangleArg {
    Reject,
    Sort,
}

/// Parameter points: exactly one source.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct ParamArgs {
    /// Inclusive linspace `a:b:n`.
    #[arg(long, value_name = "A:B:N")]
    pub param_grid: Option<String>,
    /// CSV with a header of parameter names and one point per row.
    #[arg(long, value_name = "CSV")]
    pub params_file: Option<PathBuf>,
    /// `n` uniform draws from `[lo, hi)`, seeded by `--seed`.
    #[arg(long, value_name = "LO:HI:N")]
    pub param_random: Option<String>,
    /// Comma-separated scalar parameter values.
    #[arg(long, value_delimiter = ',', value_name = "MU")]
    pub mu: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct FomArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[arg(long, value_enum)]
    pub frame: FrameArg,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Nodes per axis: `128` in 1D, `40x40` in 2D.
    #[arg(long)]
    pub grid: String,
    /// Domain `a:b` (per axis in 2D); defaults to the problem's own.
    #[arg(long, value_name = "A:B")]
    pub domain: Option<String>,
    #[arg(long)]
    pub tmax: f64,
    /// Recording interval; alternative to `--snapshots`.
    #[arg(long, conflicts_with = "snapshots", required_unless_present = "snapshots")]
    pub dt: Option<f64>,
    /// Number of recorded instants over `[0, tmax]`.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Solver steps per recorded interval (problem default when omitted).
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Lagrangian diffusion transfer (problem default when omitted).
    #[arg(long, value_enum)]
    pub transfer: Option<TransferArg>,
    /// Initial width for advdiff1d.
    #[arg(long, default_value_t = 0.1)]
    pub sigma0: f64,
    /// Diffusion coefficient for advdiff2d.
    #[arg(long, default_value_t = lagrom::experiments::ADVDIFF2D_DIFFUSION)]
    pub diffusion: f64,
    /// Viscosity for burgers2d.
    #[arg(long, default_value_t = lagrom::experiments::BURGERS2D_NU)]
    pub nu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training field container.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// `pod` or `external:<latent container>`.
    #[arg(long, default_value = "pod")]
    pub compressor: String,
    /// POD rank; for external compressors defaults to the latent width.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Train on the first `k` snapshots only.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Per-channel z-score before POD.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ReconstructFlags {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Folded Lagrangian grids: fail or reorder nodes.
    #[arg(long, value_enum, default_value = "reject")]
    pub tangle: TangleArg,
    /// 1D RBF node-merge distance as a fraction of the grid spacing.
    #[arg(long, default_value_t = 0.5)]
    pub merge_fraction: f64,
}

impl ReconstructFlags {
    pub fn options(&self, dim: usize) -> lagrom::lagframe::ReconstructOptions {
        let mut o = lagrom::lagframe::ReconstructOptions::for_dim(dim);
        if let Some(m) = self.method {
            o.method = match m {
                MethodArg::Rbf => Method::Rbf,
                MethodArg::Linear => Method::Linear,
            };
        }
        o.policy = match self.tangle {
            TangleArg::Reject => TanglePolicy::Reject,
            TangleArg::Sort => TanglePolicy::Sort,
        };
        o.merge_fraction = self.merge_fraction;
        o
    }
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub steps: usize,
    /// Eulerian (or Lagrangian) truth covering the predicted instants.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Per-(parameter, time) error table; needs `--truth`.
    #[arg(long, requires = "truth")]
    pub errors: Option<PathBuf>,
    #[command(flatten)]
    pub reconstruct: ReconstructFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Predicted Eulerian fields, or latents for external models.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Lagrangian field container.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub reconstruct: ReconstructFlags,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, requires = "truth")]
    pub errors: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CoherenceArgs {
    /// Training container.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Evaluation container; defaults to `--in`.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Train on the first `k` snapshots and evaluate the rest.
    #[arg(long)]
    pub split: Option<usize>,
    /// Parameter row of the evaluation trajectory.
    #[arg(long, default_value_t = 0)]
    pub param: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct NwidthArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SvdArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAGROM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fom(a) => commands::fom(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Encode(a) => commands::encode(&a),
        Command::Coherence(a) => commands::coherence(&a),
        Command::Nwidth(a) => commands::nwidth(&a),
        Command::Svd(a) => commands::svd(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_io() {
                4
            } else if e.is_numerical() {
                3
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}
