use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sabnn_core::flatness::GeometryKind;
use sabnn_core::models::Activation;
use sabnn_core::trainers::{LrSchedule, Method};

use crate::source::{Source, Split};

#[derive(Debug, Parser)]
#[command(name = "sabnn", version, about = "Sharpness-aware Bayesian neural networks at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a posterior and write a checkpoint.
    Train(TrainArgs),
    /// Accuracy, NLL and ECE of a checkpoint's posterior predictive.
    Eval(EvalArgs),
    /// Sharpness of networks sampled from a checkpoint.
    Sharpness(SharpnessArgs),
    /// Components of the PAC-Bayes bound for flat posteriors.
    Bound(BoundArgs),
    /// Closed-form and brute-force Gibbs posteriors on a finite grid.
    Gibbs(GibbsArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `key = value` file with defaults for any option below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Sharpness-aware variant.
    #[arg(long)]
    pub flat: bool,
    #[arg(long)]
    pub geometry: Option<GeometryKind>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_schedule: Option<LrSchedule>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub prior_tau: Option<f64>,
    #[arg(long)]
    pub log_sigma_init: Option<f64>,
    #[arg(long)]
    pub mc_train_samples: Option<usize>,
    #[arg(long)]
    pub sgld_temperature: Option<f64>,
    #[arg(long)]
    pub swag_start_epoch: Option<usize>,
    #[arg(long)]
    pub swag_rank: Option<usize>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub keep_prob: Option<f64>,
    /// Hidden widths, comma separated.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Dataset: two-moons:n=400,noise=0.2 | blobs:n=300,k=3,spread=0.5 | csv:PATH | csv-header:PATH
    #[arg(long)]
    pub data: Option<Source>,
    /// Hold out the remaining rows as a normalized test split.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluate on other data than the checkpoint's own source.
    #[arg(long)]
    pub data: Option<Source>,
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub ece_bins: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the reliability table as CSV.
    #[arg(long)]
    pub reliability_out: Option<PathBuf>,
    /// Also report the mean sharpness at this radius.
    #[arg(long)]
    pub sharpness_rho: Option<f64>,
    /// Also report this many top Hessian eigenvalues.
    #[arg(long)]
    pub eigs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SharpnessArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: Option<Source>,
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long, default_value_t = 0.05)]
    pub rho: f64,
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long = "r")]
    pub r: f64,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    /// CSV rows `label,loss,prior[,coord...]`; a first row starting with `label` is a header.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
    /// Skip the exhaustive oracle.
    #[arg(long)]
    pub no_oracle: bool,
    /// Replace each loss by its maximum within this radius (needs coordinate columns).
    #[arg(long)]
    pub sharpen_rho: Option<f64>,
}
