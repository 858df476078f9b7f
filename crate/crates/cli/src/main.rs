mod commands;
mod config;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use assortnet::models::ModelKind;
use assortnet::ChoiceError;

/// Discrete-choice estimation and assortment optimization.
///
/// Every command accepts `--config FILE` holding a JSON object keyed by the
/// long flag names (snake_case); flags on the command line override it.
/// Outputs go to `--out`, else `$ASSORTNET_OUT`, else `./out`.
///
/// Exit codes: 0 success, 2 usage or configuration error, 3 numeric
/// non-convergence, 4 solver time limit hit (incumbent written).
#[derive(Parser, Debug)]
#[command(name = "assortnet", version)]
struct Cli {
    /// JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a ground-truth model and a transaction file from it.
    Generate(GenerateArgs),
    /// Fit an estimator to a transaction file.
    Fit(FitArgs),
    /// Optimize an assortment for a saved model.
    Optimize(OptimizeArgs),
    /// Cross-entropy and calibration of a saved model on a transaction file.
    Evaluate(EvaluateArgs),
    /// Run one of the experiment grids and write its report.
    Reproduce(ReproduceArgs),
    /// Pick among candidate estimators and distil the winner into a network.
    Meta(MetaArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    /// mnl | mccm | np | mmnl
    #[arg(long)]
    pub truth: Option<ModelKind>,
    /// Write a behavioral vignette instead: iia | decoy | cycle.
    #[arg(long, conflicts_with = "truth")]
    pub fixture: Option<String>,
    /// Universe size including the no-purchase option.
    #[arg(long)]
    pub n: Option<usize>,
    /// Training transactions.
    #[arg(long)]
    pub m: Option<usize>,
    /// Also write a held-out file of this many transactions.
    #[arg(long)]
    pub m_test: Option<usize>,
    /// uniform-size | bernoulli-half | half-blocked | window-third | size-K
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitArgs {
    /// Transaction CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Validation CSV; networks keep their best epoch on it.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// mnl-mle | mccm-em | gasn-L | rasn-L | gasn-LxW
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Iteration cap for maximum likelihood and EM.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Convergence tolerance for maximum likelihood and EM.
    #[arg(long)]
    pub tol: Option<f64>,
    /// EM random restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Whether the last item of the file is the no-purchase option.
    #[arg(long)]
    pub no_purchase: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeArgs {
    /// Model JSON written by `fit` or `generate`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// brute | ro | adxopt | mip | bellman
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated revenues, one per item (no-purchase last, 0).
    #[arg(long, conflicts_with = "revenue_seed")]
    pub revenue: Option<String>,
    /// Draw revenues uniformly from [10, 50] with this seed.
    #[arg(long)]
    pub revenue_seed: Option<u64>,
    /// Comma-separated capacity usage per item.
    #[arg(long, requires = "budget", conflicts_with = "capacity_seed")]
    pub capacity: Option<String>,
    #[arg(long)]
    pub budget: Option<f64>,
    /// Draw a random capacity row with this seed.
    #[arg(long)]
    pub capacity_seed: Option<u64>,
    #[arg(long)]
    pub removal_limit: Option<usize>,
    /// Seconds; on expiry the incumbent is written and the exit code is 4.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Write the MIP as an LP file instead of solving it.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    /// Revenue level `t` used to linearise a ratio objective for export.
    #[arg(long)]
    pub level: Option<f64>,
    /// Result JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Calibration bins per item.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub no_purchase: Option<bool>,
    /// Also write the metrics JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceArgs {
    /// t5 | t8 | t9 | t12 | fig5 | fig6
    pub target: Option<String>,
    /// desk (default) | smoke
    #[arg(long)]
    pub preset: Option<String>,
    /// Full-size grid instead of the preset.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads across trials.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Comma-separated estimators; the first must be a network.
    #[arg(long)]
    pub candidates: Option<String>,
    /// Synthetic sample count for distillation.
    #[arg(long)]
    pub m_prime: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a command that produced its outputs ended.
pub enum Outcome {
    Done,
    NotConverged(String),
    TimedOut(String),
}

/// A usage mistake detected by the CLI itself.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ChoiceError>() {
            return match e {
                ChoiceError::Diverged { .. } => 3,
                ChoiceError::Io(_) | ChoiceError::Invariant(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn resolved<T: Serialize + serde::de::DeserializeOwned>(
    flags: &T,
    cfg: Option<&std::path::Path>,
) -> anyhow::Result<T> {
    config::resolve(flags, cfg).map_err(|e| Usage(format!("{e:#}")).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config.as_deref();
    let result = match &cli.command {
        Command::Generate(a) => resolved(a, cfg).and_then(|a| commands::generate(&a)),
        Command::Fit(a) => resolved(a, cfg).and_then(|a| commands::fit(&a)),
        Command::Optimize(a) => resolved(a, cfg).and_then(|a| commands::optimize(&a)),
        Command::Evaluate(a) => resolved(a, cfg).and_then(|a| commands::evaluate(&a)),
        Command::Reproduce(a) => resolved(a, cfg).and_then(|a| reproduce::run(&a)),
        Command::Meta(a) => resolved(a, cfg).and_then(|a| commands::meta(&a)),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(3)
        }
        Ok(Outcome::TimedOut(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
