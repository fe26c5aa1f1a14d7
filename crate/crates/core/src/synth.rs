//! Stationary phase-noise synthesis.
//!
//! Two generators live here. [`synthesize`] shapes complex white Gaussian
//! noise in the frequency domain by the oscillator PSD and keeps the real
//! part as the phase `phi_n`. [`SurrogateGenerator`] draws a complex
//! Gaussian sequence whose autocorrelation is exactly the exponential
//! model, by circulant embedding.
//!
//! Every trace draws from its own ChaCha stream keyed by
//! `(master_seed, trace_index)`, so batches are reproducible regardless of
//! how rayon schedules them.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::model::ExpModel;
use crate::psd::PsdSpec;
use crate::{Error, Result};

/// Default sampling rate used when the caller does not pick one.
pub const DEFAULT_FS_HZ: f64 = 983.04e6;
/// Default trace length.
pub const DEFAULT_TRACE_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseTrace {
    pub fs_hz: f64,
    pub phases: Vec<f64>,
}

impl PhaseNoiseTrace {
    pub fn new(fs_hz: f64, phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::domain("trace must hold at least one sample"));
        }
        if let Some(i) = phases.iter().position(|p| !p.is_finite()) {
            return Err(Error::domain(format!("phase {i} is not finite")));
        }
        Ok(Self { fs_hz, phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `alpha_n = e^{i phi_n}`.
    pub fn alpha(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect()
    }
}

/// RNG for stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Precomputed bin gains for one (PSD, carrier, fs, n) combination.
pub struct PsdShaper {
    fs_hz: f64,
    gains: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl PsdShaper {
    pub fn new(spec: &PsdSpec, carrier_hz: f64, fs_hz: f64, n: usize) -> Result<Self> {
        spec.validate()?;
        if n < 2 {
            return Err(Error::domain(format!("need n >= 2 samples, got {n}")));
        }
        if !(fs_hz > 0.0 && fs_hz.is_finite()) {
            return Err(Error::domain(format!(
                "sampling rate must be positive, got {fs_hz}"
            )));
        }
        if !(carrier_hz > 0.0) {
            return Err(Error::domain(format!(
                "carrier must be positive, got {carrier_hz}"
            )));
        }
        let df = fs_hz / n as f64;
        // Var(Re(sum_k g_k W_k e^{..})) = sum_k g_k^2 / 2 must equal sum_k S(f_k) df.
        let gains = (0..n)
            .map(|k| {
                let bin = if k <= n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                let s = spec.linear(bin.abs() * df, carrier_hz);
                (2.0 * s * df).sqrt()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self { fs_hz, gains, fft })
    }

    pub fn generate<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> PhaseNoiseTrace {
        let mut buf: Vec<Complex64> = self
            .gains
            .iter()
            .map(|&g| {
                let w = complex_normal(rng);
                if g == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    w * g
                }
            })
            .collect();
        self.fft.process(&mut buf);
        PhaseNoiseTrace {
            fs_hz: self.fs_hz,
            phases: buf.iter().map(|z| z.re).collect(),
        }
    }
}

/// One phase-noise trace of length `n`.
pub fn synthesize(
    spec: &PsdSpec,
    carrier_hz: f64,
    fs_hz: f64,
    n: usize,
    seed: u64,
) -> Result<PhaseNoiseTrace> {
    let shaper = PsdShaper::new(spec, carrier_hz, fs_hz, n)?;
    Ok(shaper.generate(&mut stream_rng(seed, 0)))
}

/// `count` independent traces; trace `i` uses stream `i` of `master_seed`,
/// so trace 0 equals `synthesize(.., master_seed)`.
pub fn synthesize_batch(
    spec: &PsdSpec,
    carrier_hz: f64,
    fs_hz: f64,
    n: usize,
    count: usize,
    master_seed: u64,
) -> Result<Vec<PhaseNoiseTrace>> {
    let shaper = PsdShaper::new(spec, carrier_hz, fs_hz, n)?;
    Ok((0..count)
        .into_par_iter()
        .map(|i| shaper.generate(&mut stream_rng(master_seed, i as u64)))
        .collect())
}

/// Circulant-embedding generator for complex Gaussian sequences with
/// `E[alpha_n alpha*_{n-j}] = gamma_E(j)`.
pub struct SurrogateGenerator {
    n: usize,
    sqrt_eig: Vec<f64>,
    max_clipped: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl SurrogateGenerator {
    pub fn new(model: &ExpModel, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("need n >= 2 samples, got {n}")));
        }
        let m = (2 * (n - 1)).next_power_of_two();
        let mut first_row: Vec<Complex64> = (0..m)
            .map(|k| Complex64::new(model.gamma_e(k.min(m - k) as i64), 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut first_row);
        let mut max_clipped = 0.0f64;
        let sqrt_eig = first_row
            .iter()
            .map(|z| {
                if z.re < 0.0 {
                    max_clipped = max_clipped.max(-z.re);
                    0.0
                } else {
                    (z.re / m as f64).sqrt()
                }
            })
            .collect();
        Ok(Self {
            n,
            sqrt_eig,
            max_clipped,
            fft: planner.plan_fft_inverse(m),
        })
    }

    /// Largest negative eigenvalue magnitude that had to be clipped to zero.
    pub fn max_clipped(&self) -> f64 {
        self.max_clipped
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn generate<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .sqrt_eig
            .iter()
            .map(|&s| complex_normal(rng) * s)
            .collect();
        self.fft.process(&mut buf);
        buf.truncate(self.n);
        buf
    }
}

/// Surrogate alpha sequence of length `n` for `model`, seeded.
pub fn synthesize_from_autocorr(model: &ExpModel, n: usize, seed: u64) -> Result<Vec<Complex64>> {
    let generator = SurrogateGenerator::new(model, n)?;
    Ok(generator.generate(&mut stream_rng(seed, 0)))
}
