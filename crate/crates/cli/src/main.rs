//! `bgw`: eigenpair, simulation and experiment runs from a TOML config.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bgw",
    version,
    about = "Bisexual Galton-Watson processes: operator eigenpairs, simulation, experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true, env = "BGW_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory; overrides the config (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Print the main artifact to stdout in this format instead of `key=value` lines.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve for (lambda*, z*) and classify the model.
    Eigen,
    /// Simulate one trajectory and estimate the extinction probability.
    Simulate,
    /// Run the experiment in the `[experiment]` block.
    Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
