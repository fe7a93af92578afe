//! `wavebreak`: evaluate breaking criteria, run simulations and sweeps,
//! tabulate kernels, and run the verification corpus.
//!
//! Exit codes: 0 pass or inconclusive, 1 a theorem check failed, 2 usage or
//! configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] wavebreak_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Whether every theorem check that could be decided passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Parser, Debug)]
#[command(
    name = "wavebreak",
    version,
    about = "Wave-breaking criteria and pseudospectral simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps and verification (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for the random corpus and the C_GN estimator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Evaluate the breaking criterion for the configured data.
    Criteria,
    /// Integrate, extrapolate the breaking time, and reconcile with the criterion.
    Simulate,
    /// Criterion (and optionally simulation) over a parameter grid.
    Sweep,
    /// Tabulate the Whitham and Bessel kernels and gamma(s).
    Kernels,
    /// Run the verification corpus.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Criteria => "criteria",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Kernels => "kernels",
            Command::Verify => "verify",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
