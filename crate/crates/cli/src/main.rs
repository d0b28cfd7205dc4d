use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Clipped SGD experiments under heavy-tailed noise.
///
/// Every subcommand reads the same JSON configuration (`--config`, schema `hclip-v1`);
/// `--set key.path=value` overrides any field, and dedicated flags override both.
#[derive(Debug, Parser)]
#[command(name = "hclip", version, arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override a configuration field by dotted path, e.g. `run.lambda=2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true, env = "HCLIP_WORKERS")]
    pub workers: Option<usize>,
    /// Omit the generation-time line from output files.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Write results to this file.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// `csv` or `json` (default: from the output extension).
    #[arg(long, global = true)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run T trials at the configured (K, lambda) and compare with the bound.
    Run,
    /// Sweep `experiment.k_grid` (with a rate fit) and/or `experiment.lambda_grid`.
    Sweep,
    /// Gaussian-mechanism noise scale for a privacy target.
    Calibrate(CalibrateArgs),
    /// Monte Carlo check of the clipped-estimator bias and variance bounds.
    VerifyLemma(LemmaArgs),
    /// Place the clipping level in its regime and evaluate the table cells.
    Regimes(RegimeArgs),
    /// Every term of the step-size rule.
    Stepsize(StepArgs),
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "K")]
    pub iterations: Option<u64>,
    /// Sampling ratio; selects the finite-sum calibration.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub c_dp: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Samples per row (default `experiment.lemma_samples`).
    #[arg(long)]
    pub samples: Option<usize>,
}

/// Overrides for the theory constants; unset ones come from the configuration.
#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long = "L")]
    pub smoothness: Option<f64>,
    /// `R` in the convex case, `Δ` in the non-convex case.
    #[arg(long = "R", visible_alias = "Delta")]
    pub radius: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "K")]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma_omega: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Use the non-convex formulas.
    #[arg(long)]
    pub nonconvex: bool,
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub theory: TheoryArgs,
    /// Offset in the `4A - eta` cells (default `1e-3 A`).
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[command(flatten)]
    pub theory: TheoryArgs,
    /// Keep only the ceiling and the first three terms.
    #[arg(long)]
    pub reduced: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
