//! `robust-hjm`: configuration-driven experiments.
//!
//! Exit status: 0 pass, 1 check failure, 2 configuration or input error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Status};
use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "robust-hjm", version, about = "HJM forward rates under volatility uncertainty")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured Monte Carlo paths per scenario.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Suppress the human-readable summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path per scenario with its forward surface and bond ladder.
    Simulate,
    /// Drift condition, martingale, identity and moment-bound checks.
    Check,
    /// Robust Ho-Lee / Hull-White prices against the HJM surface.
    Price,
    /// Generate or check drift-condition coefficients.
    Drift {
        #[command(subcommand)]
        action: DriftAction,
    },
    /// Residual spread of the Vasicek mean-reversion requirement.
    Vasicek,
}

#[derive(Subcommand)]
enum DriftAction {
    /// Write the model's coefficients as `t,T,alpha,beta,gamma`.
    Generate,
    /// Fit market prices and report drift-condition residuals.
    Check,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let path = cli.common.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = cli.common.paths {
        cfg.paths = paths;
    }
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let exp = cfg.into_experiment(&base)?;
    let ctx = Context { exp, out: cli.common.out, quiet: cli.common.quiet };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Check => commands::check(&ctx),
        Command::Price => commands::price(&ctx),
        Command::Drift { action: DriftAction::Generate } => commands::drift_generate(&ctx),
        Command::Drift { action: DriftAction::Check } => commands::drift_check(&ctx),
        Command::Vasicek => commands::vasicek(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
