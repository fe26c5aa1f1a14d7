//! Empirical autocorrelation `gamma(j) = E[alpha_n alpha*_{n-j}]` of
//! `alpha_n = e^{i phi_n}`, averaged over time and realizations.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::synth::PhaseNoiseTrace;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrEstimate {
    pub max_lag: usize,
    /// `gamma(0..=max_lag)`, with `gamma(0) = 1`.
    pub values: Vec<f64>,
    pub n_realizations: usize,
    /// Largest `|Im gamma(j)|` before the imaginary part was dropped.
    pub max_imag: f64,
}

pub fn empirical_autocorr(traces: &[PhaseNoiseTrace], max_lag: usize) -> Result<AutocorrEstimate> {
    let seqs: Vec<Vec<Complex64>> = traces.par_iter().map(|t| t.alpha()).collect();
    empirical_autocorr_complex(&seqs, max_lag)
}

/// Same estimator over arbitrary complex sequences.
pub fn empirical_autocorr_complex(
    seqs: &[Vec<Complex64>],
    max_lag: usize,
) -> Result<AutocorrEstimate> {
    if seqs.is_empty() {
        return Err(Error::domain("need at least one trace"));
    }
    if let Some(short) = seqs.iter().map(Vec::len).find(|&len| len <= max_lag) {
        return Err(Error::domain(format!(
            "max lag {max_lag} needs traces longer than {max_lag} samples, got {short}"
        )));
    }

    let lagged: Vec<Vec<Complex64>> = seqs.par_iter().map(|s| lag_products(s, max_lag)).collect();
    let mut sums = vec![Complex64::new(0.0, 0.0); max_lag + 1];
    let mut counts = vec![0usize; max_lag + 1];
    for (s, products) in seqs.iter().zip(&lagged) {
        for j in 0..=max_lag {
            sums[j] += products[j];
            counts[j] += s.len() - j;
        }
    }
    let raw: Vec<Complex64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let norm = raw[0].re;
    if !(norm > 0.0) {
        return Err(Error::domain("zero-power input"));
    }
    let max_imag = raw.iter().map(|z| (z.im / norm).abs()).fold(0.0, f64::max);
    let mut values: Vec<f64> = raw.iter().map(|z| z.re / norm).collect();
    values[0] = 1.0;
    Ok(AutocorrEstimate {
        max_lag,
        values,
        n_realizations: seqs.len(),
        max_imag,
    })
}

/// `sum_n x_n conj(x_{n-j})` for `j = 0..=max_lag`, via zero-padded FFT.
fn lag_products(x: &[Complex64], max_lag: usize) -> Vec<Complex64> {
    let size = (x.len() + max_lag).next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.to_vec();
    buf.resize(size, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(size).process(&mut buf);
    for z in &mut buf {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    // Inverse transform of |X|^2 is sum_n x_{n+j} conj(x_n).
    buf.truncate(max_lag + 1);
    buf.into_iter().map(|z| z / size as f64).collect()
}
