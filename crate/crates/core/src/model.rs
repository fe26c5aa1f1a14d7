//! Exponential autocorrelation model `gamma_E(j) = (e^{-a|j|} + c) / (1 + c)`
//! with `c = b / (1 - b)`, and its least-squares fit to an empirical
//! autocorrelation.

use serde::{Deserialize, Serialize};

use crate::autocorr::AutocorrEstimate;
use crate::{Error, Result};

/// Upper clamp on the floor `b`; keeps `c` finite.
pub const B_MAX: f64 = 1.0 - 1e-9;
/// Upper clamp on `lambda = e^{-a Delta}`.
pub const LAMBDA_MAX: f64 = 1.0 - 1e-12;
/// Fits with a mean square error above this are flagged as poor.
pub const POOR_FIT_MSE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpModel {
    /// Decay rate per sample.
    pub a: f64,
    /// Correlation floor.
    pub b: f64,
    #[serde(default)]
    pub fc_hz: Option<f64>,
    #[serde(default)]
    pub fit_mse: f64,
}

impl ExpModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!(
                "decay rate a must be positive, got {a}"
            )));
        }
        if !(0.0..1.0).contains(&b) {
            return Err(Error::domain(format!(
                "floor b must lie in [0, 1), got {b}"
            )));
        }
        Ok(Self {
            a,
            b: b.min(B_MAX),
            fc_hz: None,
            fit_mse: 0.0,
        })
    }

    pub fn with_carrier(mut self, fc_hz: f64) -> Self {
        self.fc_hz = Some(fc_hz);
        self
    }

    /// Re-checks the invariants, e.g. after deserialization.
    pub fn validated(self) -> Result<Self> {
        let mut m = Self::new(self.a, self.b)?;
        m.fc_hz = self.fc_hz;
        m.fit_mse = self.fit_mse;
        Ok(m)
    }

    /// `c = b / (1 - b)`.
    pub fn c(&self) -> f64 {
        self.b / (1.0 - self.b)
    }

    pub fn gamma_e(&self, lag: i64) -> f64 {
        let c = self.c();
        ((-self.a * lag.unsigned_abs() as f64).exp() + c) / (1.0 + c)
    }

    /// Same value through `(1 - b) e^{-a|j|} + b`.
    pub fn gamma_e_floor_form(&self, lag: i64) -> f64 {
        (1.0 - self.b) * (-self.a * lag.unsigned_abs() as f64).exp() + self.b
    }

    /// `lambda = e^{-a Delta}`, clamped below one.
    pub fn lambda(&self, delta: usize) -> f64 {
        lambda_for(self.a, delta)
    }

    pub fn is_poor_fit(&self) -> bool {
        self.fit_mse > POOR_FIT_MSE
    }
}

pub(crate) fn lambda_for(a: f64, delta: usize) -> f64 {
    (-a * delta as f64).exp().min(LAMBDA_MAX)
}

/// Mean square error of `(a, b)` against `values[lo..=hi]`.
pub fn fit_mse(values: &[f64], lo: usize, hi: usize, a: f64, b: f64) -> f64 {
    let sum: f64 = (lo..=hi)
        .map(|j| {
            let model = (1.0 - b) * (-a * j as f64).exp() + b;
            let r = values[j] - model;
            r * r
        })
        .sum();
    sum / (hi - lo + 1) as f64
}

/// Least-squares floor for a fixed decay rate (the model is affine in `b`).
fn best_floor(values: &[f64], lo: usize, hi: usize, a: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for j in lo..=hi {
        let e = (-a * j as f64).exp();
        num += (values[j] - e) * (1.0 - e);
        den += (1.0 - e) * (1.0 - e);
    }
    if den <= 0.0 {
        return 0.0;
    }
    (num / den).clamp(0.0, B_MAX)
}

/// Default lag range for a trace of length `n`: `[0, n/4]`.
pub fn default_fit_range(n: usize) -> (usize, usize) {
    (0, n / 4)
}

/// Fits `(a, b)` over lags `lag_range.0 ..= lag_range.1`.
///
/// A log-spaced grid over `a` (with the floor solved exactly for each
/// candidate) seeds a Nelder-Mead search in `(ln a, b)`.
pub fn fit(estimate: &AutocorrEstimate, lag_range: (usize, usize)) -> Result<ExpModel> {
    let (lo, hi) = lag_range;
    let values = &estimate.values;
    if hi >= values.len() || lo > hi {
        return Err(Error::domain(format!(
            "lag range [{lo}, {hi}] outside estimate with max lag {}",
            estimate.max_lag
        )));
    }
    if hi - lo < 8 {
        return Err(Error::domain(format!(
            "lag range [{lo}, {hi}] needs at least 9 lags"
        )));
    }
    if values[lo..=hi].iter().all(|v| (v - 1.0).abs() < 1e-9) {
        return Err(Error::DegenerateAutocorrelation);
    }

    const GRID: usize = 241;
    let (ln_lo, ln_hi) = (1e-5f64.ln(), 1f64.ln());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..GRID {
        let a = (ln_lo + (ln_hi - ln_lo) * i as f64 / (GRID - 1) as f64).exp();
        let b = best_floor(values, lo, hi, a);
        let mse = fit_mse(values, lo, hi, a, b);
        // Strict comparison keeps the smallest a on ties.
        if mse < best.0 {
            best = (mse, a, b);
        }
    }

    let objective = |x: [f64; 2]| {
        let b = x[1];
        if !(0.0..=B_MAX).contains(&b) {
            return f64::INFINITY;
        }
        fit_mse(values, lo, hi, x[0].exp(), b)
    };
    let start = [best.1.ln(), best.2];
    let step = [0.05, (0.01f64).min((B_MAX - best.2).max(1e-4))];
    let refined = nelder_mead(objective, start, step, 1e-13, 4000);
    let a = refined[0].exp();
    let b = best_floor(values, lo, hi, a);
    if b >= B_MAX {
        return Err(Error::DegenerateAutocorrelation);
    }
    let mut model = ExpModel::new(a, b)?;
    model.fit_mse = fit_mse(values, lo, hi, a, b);
    Ok(model)
}

/// Minimal 2-D Nelder-Mead with standard coefficients.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    step: [f64; 2],
    x_tol: f64,
    max_iter: usize,
) -> [f64; 2] {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(&f);
    let lerp =
        |p: [f64; 2], q: [f64; 2], t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];

    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let size = (1..3)
            .map(|i| {
                (simplex[i][0] - simplex[0][0])
                    .abs()
                    .max((simplex[i][1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if size < x_tol {
            break;
        }

        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            // Outside or inside contraction.
            let target = if fr < values[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(target);
            if fc < values[2].min(fr) {
                simplex[2] = target;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap_or(0);
    simplex[best]
}
