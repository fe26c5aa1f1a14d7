//! `ptrs`: pilot-spacing design from phase-noise statistics.
//!
//! Exit codes: 0 on success (an infeasible plan included), 1 on a domain
//! or I/O error, 2 on a usage error.

mod args;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

/// Seed override read from the environment; wins over `--seed`.
pub const SEED_ENV: &str = "PTRS_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(ptrs_core::Error),
}

impl From<ptrs_core::Error> for CliError {
    fn from(e: ptrs_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "ptrs",
    version,
    about = "Phase-noise-aware pilot spacing design"
)]
pub struct Cli {
    /// Directory for data files and sidecars.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Master seed; the PTRS_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Synthesize phase-noise traces from a PSD.
    Synth(commands::SynthArgs),
    /// Empirical autocorrelation of e^{i phi}.
    Autocorr(commands::AutocorrArgs),
    /// Fit the exponential model to an autocorrelation.
    Fit(commands::FitArgs),
    /// Wiener interpolation coefficients.
    Coeffs(commands::CoeffsArgs),
    /// Interpolation cost J for one pilot pattern.
    Cost(commands::CostArgs),
    /// J against pilot spacing.
    SweepDelta(commands::SweepDeltaArgs),
    /// J against carrier frequency for several spacings.
    SweepFc(commands::SweepFcArgs),
    /// J over a grid of model parameters.
    SweepAb(commands::SweepAbArgs),
    /// Affine fits J = omega * delta + eta and their carrier dependence.
    FitAffine(commands::FitAffineArgs),
    /// Largest pilot spacing under a cost ceiling.
    Plan(commands::PlanArgs),
    /// Monte-Carlo check of the analytic cost.
    Simulate(commands::SimulateArgs),
}

/// `PTRS_SEED` if set, else `--seed`, else `fallback`.
pub fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<(u64, &'static str), CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(|s| (s, SEED_ENV)).map_err(|_| {
            CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))
        }),
        Err(_) => Ok(match flag {
            Some(s) => (s, "--seed"),
            None => (fallback, "default"),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
