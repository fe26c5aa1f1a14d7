//! Argument groups shared by several subcommands, and their resolution
//! into core types.

use std::path::{Path, PathBuf};

use clap::Args;
use ptrs_core::model::ExpModel;
use ptrs_core::numeric::parse_range;
use ptrs_core::pattern::{FirstPilot, PilotPattern};
use ptrs_core::psd::PsdSpec;
use ptrs_core::synth::{DEFAULT_FS_HZ, DEFAULT_TRACE_LEN};
use ptrs_core::{io, reference};
use serde::Serialize;

use crate::CliError;

/// Values from `lo:hi:step`, a comma list or a single number.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Range(pub Vec<f64>);

pub fn range(s: &str) -> Result<Range, String> {
    parse_range(s).map(Range).map_err(|e| e.to_string())
}

impl Range {
    /// The values as positive integer spacings.
    pub fn spacings(&self) -> Result<Vec<usize>, CliError> {
        self.0
            .iter()
            .map(|&d| {
                if d >= 1.0 && d.fract() == 0.0 {
                    Ok(d as usize)
                } else {
                    Err(CliError::Usage(format!(
                        "spacing must be a positive integer, got {d}"
                    )))
                }
            })
            .collect()
    }
}

pub fn first_pilot(s: &str) -> Result<FirstPilot, String> {
    s.parse().map_err(|e: ptrs_core::Error| e.to_string())
}

/// `lo:hi` lag window.
pub fn lag_window(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("lag window must be lo:hi, got '{s}'"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad lag '{v}'"))
    };
    Ok((parse(lo)?, parse(hi)?))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Model JSON as written by `fit`.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    pub model: Option<PathBuf>,
    /// Decay rate per sample.
    #[arg(long, requires = "b")]
    pub a: Option<f64>,
    /// Correlation floor.
    #[arg(long, requires = "a")]
    pub b: Option<f64>,
    /// Carrier frequency in Hz. Without --model or --a/--b, selects the
    /// built-in reference model for this carrier.
    #[arg(long)]
    pub fc: Option<f64>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<ExpModel, CliError> {
        let model = if let Some(path) = &self.model {
            let m: ExpModel = io::read_json(path)?;
            m.validated()?
        } else if let (Some(a), Some(b)) = (self.a, self.b) {
            ExpModel::new(a, b)?
        } else if let Some(fc) = self.fc {
            return Ok(reference::model_at(fc)?);
        } else {
            return Err(CliError::Usage(
                "no model given: pass --model FILE, --a and --b, or --fc".into(),
            ));
        };
        Ok(match (self.fc, model.fc_hz) {
            (Some(fc), None) => model.with_carrier(fc),
            _ => model,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PatternArgs {
    /// Samples per symbol.
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    /// Pilot spacing.
    #[arg(long)]
    pub delta: Option<usize>,
    /// First pilot: a 1-based index or `center`.
    #[arg(long, default_value = "1", value_parser = first_pilot)]
    pub p1: FirstPilot,
    /// Number of pilots; defaults to every pilot that fits.
    #[arg(long)]
    pub n_pilots: Option<usize>,
}

impl PatternArgs {
    pub fn resolve(&self) -> Result<PilotPattern, CliError> {
        let delta = self
            .delta
            .ok_or_else(|| CliError::Usage("--delta is required".into()))?;
        let p1 = self.p1.resolve(delta);
        Ok(match self.n_pilots {
            Some(np) => PilotPattern::new(self.n, p1, delta, np)?,
            None => PilotPattern::uniform(self.n, p1, delta)?,
        })
    }
}

/// Phase-noise source for the subcommands that synthesize traces.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// PSD JSON; defaults to the built-in oscillator profile.
    #[arg(long)]
    pub psd: Option<PathBuf>,
    /// Carrier frequency in Hz.
    #[arg(long)]
    pub fc: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = DEFAULT_FS_HZ)]
    pub fs: f64,
    /// Samples per trace.
    #[arg(long, default_value_t = DEFAULT_TRACE_LEN)]
    pub n: usize,
}

pub const DEFAULT_CARRIER_HZ: f64 = 100e9;

/// PSD from a JSON file, or the built-in profile.
pub fn load_psd(path: Option<&Path>) -> Result<PsdSpec, CliError> {
    let spec = match path {
        Some(path) => io::read_json(path)?,
        None => PsdSpec::default_profile(),
    };
    spec.validate()?;
    Ok(spec)
}

impl SourceArgs {
    pub fn psd(&self) -> Result<PsdSpec, CliError> {
        load_psd(self.psd.as_deref())
    }

    pub fn carrier(&self) -> f64 {
        self.fc.unwrap_or(DEFAULT_CARRIER_HZ)
    }
}
