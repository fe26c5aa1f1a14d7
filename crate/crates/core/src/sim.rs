//! Monte-Carlo check of the analytic cost on a single symbol.
//!
//! At infinite SNR and without a channel the phase noise multiplies the
//! time-domain samples directly, `y_n = alpha_n x_n`, so the DFT spreading,
//! IFFT and cyclic prefix cancel out of the tracking error and are not
//! simulated.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{evaluate, CostMethod};
use crate::model::ExpModel;
use crate::numeric::pairwise_sum;
use crate::pattern::PilotPattern;
use crate::psd::PsdSpec;
use crate::synth::{complex_normal, stream_rng, PsdShaper, SurrogateGenerator};
use crate::wiener::{coefficients_closed, coefficients_numeric, interpolate, WienerCoefficients};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Complex Gaussian noise with autocorrelation exactly `gamma_E`.
    Surrogate,
    /// `alpha_n = e^{i phi_n}` with `phi` drawn from a PSD.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSource {
    pub psd: PsdSpec,
    pub carrier_hz: f64,
    pub fs_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub pattern: PilotPattern,
    /// Drives the interpolator, the analytic cost and, in surrogate mode, the noise.
    pub model: ExpModel,
    pub mode: SimMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSource>,
    pub trials: usize,
    pub seed: u64,
    /// Adds white noise to data symbols only; pilots stay clean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub empirical_j_pct: f64,
    pub stderr_pct: f64,
    pub analytic_j_pct: f64,
    /// `(empirical - analytic) / stderr`; absent when the standard error is zero.
    pub z_score: Option<f64>,
    pub mode: SimMode,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_clipped_eigenvalue: Option<f64>,
    /// Mean `|y_n conj(alpha_hat_n) - x_n|^2` over data symbols.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_mse: Option<f64>,
}

enum Source {
    Surrogate(SurrogateGenerator),
    Physical(PsdShaper),
}

impl Source {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        match self {
            Source::Surrogate(g) => g.generate(rng),
            Source::Physical(s) => s.generate(rng).alpha(),
        }
    }
}

fn qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let bits: u8 = rng.random_range(0..4);
    let re = if bits & 1 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    let im = if bits & 2 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    Complex64::new(re, im)
}

fn wiener_for(model: &ExpModel, pattern: &PilotPattern) -> Result<WienerCoefficients> {
    match coefficients_closed(model, pattern) {
        Err(Error::FallbackToNumeric { .. }) => coefficients_numeric(model, pattern),
        other => other,
    }
}

struct Trial {
    err: f64,
    data_mse: f64,
}

fn run_trial(
    source: &Source,
    coeffs: &WienerCoefficients,
    noise_std: Option<f64>,
    seed: u64,
    index: u64,
) -> Result<Trial> {
    let pattern = &coeffs.pattern;
    let mut rng = stream_rng(seed, index);
    let alpha = source.draw(&mut rng);
    let x: Vec<Complex64> = (0..pattern.n_total).map(|_| qpsk(&mut rng)).collect();
    let mut y: Vec<Complex64> = alpha.iter().zip(&x).map(|(a, x)| a * x).collect();
    if let Some(std) = noise_std {
        for (n, y) in y.iter_mut().enumerate() {
            if pattern.pilot_at(n + 1).is_none() {
                *y += complex_normal(&mut rng) * std;
            }
        }
    }
    // LS estimate with unit-modulus pilots: y_p conj(x_p) = alpha_p.
    let estimates: Vec<Complex64> = pattern
        .positions()
        .map(|p| y[p - 1] * x[p - 1].conj())
        .collect();
    let alpha_hat = interpolate(coeffs, &estimates)?;
    let errs: Vec<f64> = alpha
        .iter()
        .zip(&alpha_hat)
        .map(|(a, h)| (a - h).norm_sqr())
        .collect();
    let data: Vec<f64> = (0..pattern.n_total)
        .filter(|&n| pattern.pilot_at(n + 1).is_none())
        .map(|n| (y[n] * alpha_hat[n].conj() - x[n]).norm_sqr())
        .collect();
    let data_mse = if data.is_empty() {
        0.0
    } else {
        pairwise_sum(&data) / data.len() as f64
    };
    Ok(Trial {
        err: pairwise_sum(&errs),
        data_mse,
    })
}

/// Runs `trials` independent symbols; trial `t` uses RNG stream `t` of `seed`.
pub fn run(scenario: &SimScenario) -> Result<SimResult> {
    if scenario.trials < 1 {
        return Err(Error::domain("need at least one trial"));
    }
    let pattern = &scenario.pattern;
    let n = pattern.n_total;
    let (source, clipped) = match scenario.mode {
        SimMode::Surrogate => {
            let g = SurrogateGenerator::new(&scenario.model, n)?;
            let clipped = g.max_clipped();
            (Source::Surrogate(g), Some(clipped))
        }
        SimMode::Physical => {
            let src = scenario
                .physical
                .as_ref()
                .ok_or_else(|| Error::domain("physical mode needs a PSD source"))?;
            (
                Source::Physical(PsdShaper::new(&src.psd, src.carrier_hz, src.fs_hz, n)?),
                None,
            )
        }
    };
    let coeffs = wiener_for(&scenario.model, pattern)?;
    let noise_std = scenario.snr_db.map(|snr| 10f64.powf(-snr / 20.0));

    let trials: Vec<Trial> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&source, &coeffs, noise_std, scenario.seed, t))
        .collect::<Result<_>>()?;

    let count = trials.len() as f64;
    let errs: Vec<f64> = trials.iter().map(|t| t.err).collect();
    let mean = pairwise_sum(&errs) / count;
    let sq: Vec<f64> = errs.iter().map(|e| (e - mean).powi(2)).collect();
    let var = if trials.len() > 1 {
        pairwise_sum(&sq) / (count - 1.0)
    } else {
        0.0
    };
    let scale = 100.0 / n as f64;
    let empirical = mean * scale;
    let stderr = (var / count).sqrt() * scale;
    let analytic = evaluate(&scenario.model, pattern, CostMethod::Numeric)?.j_pct;
    let data_mse = scenario.snr_db.map(|_| {
        let v: Vec<f64> = trials.iter().map(|t| t.data_mse).collect();
        pairwise_sum(&v) / count
    });

    Ok(SimResult {
        empirical_j_pct: empirical,
        stderr_pct: stderr,
        analytic_j_pct: analytic,
        z_score: (stderr > 0.0).then(|| (empirical - analytic) / stderr),
        mode: scenario.mode,
        trials: scenario.trials,
        seed: scenario.seed,
        max_clipped_eigenvalue: clipped,
        data_mse,
    })
}
