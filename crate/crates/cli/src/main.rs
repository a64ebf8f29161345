//! `causal-rulefit`: simulate data, fit causal rule ensembles, predict
//! treatment effects and inspect the selected rules.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use causal_rulefit::simulation::Design;

#[derive(Debug, Parser)]
#[command(name = "causal-rulefit", version, about = "Interpretable heterogeneous treatment effect estimation with causal rule ensembles")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// TOML file whose keys mirror flag names; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a benchmark dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit a model and write it as JSON.
    Fit(FitArgs),
    /// Write estimated treatment effects for every row of a dataset.
    Predict(PredictArgs),
    /// Print the importance table of a fitted model.
    Inspect(InspectArgs),
    /// Choose boosting hyperparameters by repeated k-fold cross-validation.
    Tune(TuneArgs),
    /// Mean squared error between a truth column and a prediction column.
    Evaluate(EvaluateArgs),
    /// Score the estimator and baselines on simulated replications.
    Benchmark(BenchmarkArgs),
}

fn parse_design(s: &str) -> Result<Design, String> {
    s.parse().map_err(|e: causal_rulefit::Error| e.to_string())
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie strictly between 0 and 1"))
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be a positive number"))
    }
}

fn shrinkage(s: &str) -> Result<f64, String> {
    let v = positive_real(s)?;
    if v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie in (0, 1]"))
    }
}

fn mean_terminal(s: &str) -> Result<f64, String> {
    let v = positive_real(s)?;
    if v >= 2.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be at least 2"))
    }
}

fn winsor_q(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..0.5).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} must lie in [0, 0.5)"))
    }
}

fn folds(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err(format!("{v} folds requested, at least 2 are needed"))
    }
}

fn nonnegative_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be a non-negative number"))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Benchmark scenario, 1 to 12.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=12))]
    pub scenario: u8,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(5..))]
    pub p: u64,
    /// `rct` (randomized, π = ½) or `obs` (confounded assignment).
    #[arg(long, default_value = "rct", value_parser = parse_design)]
    pub design: Design,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Input table and the roles of its columns.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("propensity").args(["pscore", "pscore_col"]).required(true)))]
pub struct DataArgs {
    /// CSV file; every column without a role is a covariate.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub outcome: String,
    /// 0/1 treatment indicator column.
    #[arg(long, default_value = "t")]
    pub treatment: String,
    /// Constant treatment probability for every row.
    #[arg(long, value_parser = open_unit)]
    pub pscore: Option<f64>,
    /// Column holding per-row treatment probabilities.
    #[arg(long)]
    pub pscore_col: Option<String>,
    /// Column of true effects, excluded from the covariates when present.
    #[arg(long, default_value = "true_tau")]
    pub truth_col: String,
}

/// Solver and basis settings shared by `fit` and `tune`.
#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Minimum rows per tree leaf.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_leaf: Option<u64>,
    /// Winsorizing quantile of the linear terms.
    #[arg(long, value_parser = winsor_q)]
    pub winsor_q: Option<f64>,
    /// Number of λ values on the regularization path.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub lambda_path: Option<u64>,
    /// Smallest λ as a fraction of the largest.
    #[arg(long, value_parser = open_unit)]
    pub lambda_min_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Output path of the model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of boosted trees M.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trees: Option<u64>,
    /// Mean number of terminal nodes per tree, at least 2.
    #[arg(long, value_parser = mean_terminal)]
    pub mean_depth: Option<f64>,
    /// Learning rate in (0, 1].
    #[arg(long, value_parser = shrinkage)]
    pub shrinkage: Option<f64>,
    /// Rows per tree: a fraction up to 1, a count above.
    #[arg(long, value_parser = positive_real)]
    pub subsample: Option<f64>,
    /// Cross-validation folds for choosing λ.
    #[arg(long, value_parser = folds)]
    pub folds: Option<usize>,
    /// Cross-validation repeats for choosing λ.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the arm predictions F(x, 0) and F(x, 1).
    #[arg(long)]
    pub both_arms: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Show at most this many terms.
    #[arg(long)]
    pub top: Option<usize>,
    /// Hide rules whose support does not exceed this.
    #[arg(long, default_value_t = 0.1, value_parser = nonnegative_real)]
    pub min_support: f64,
    /// Show every nonzero term, ignoring the importance and support filters.
    #[arg(long)]
    pub all: bool,
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Candidate tree counts.
    #[arg(long, value_delimiter = ',', default_values_t = [200u64, 300, 400])]
    pub trees: Vec<u64>,
    /// Candidate mean terminal-node counts.
    #[arg(long, value_delimiter = ',', value_parser = mean_terminal, default_values_t = [2.0, 3.0, 4.0])]
    pub mean_depth: Vec<f64>,
    /// Candidate subsample sizes.
    #[arg(long, value_delimiter = ',', value_parser = positive_real, default_values_t = [0.25, 0.5, 0.75])]
    pub subsample: Vec<f64>,
    /// Candidate learning rates.
    #[arg(long, value_delimiter = ',', value_parser = shrinkage, default_values_t = [0.01, 0.05, 0.1])]
    pub shrinkage: Vec<f64>,
    /// Folds of the tuning cross-validation.
    #[arg(long, default_value_t = 10, value_parser = folds)]
    pub folds: usize,
    /// Repeats of the tuning cross-validation.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Output CSV with the error of every grid point.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV holding both columns, or two files: truth first, predictions second.
    #[arg(long, num_args = 1..=2, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, default_value = "true_tau")]
    pub truth_col: String,
    #[arg(long, default_value = "tau_hat")]
    pub pred_col: String,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=12))]
    pub scenario: u8,
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(5..))]
    pub p: u64,
    #[arg(long, default_value = "rct", value_parser = parse_design)]
    pub design: Design,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of replications.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    /// Output CSV with one row per estimator and replication.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(threads))
            .build_global()
        {
            eprintln!("error: cannot configure threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
