//! Wiener interpolation of pilot phase estimates.
//!
//! Under the exponential model the pilot autocorrelation matrix is a
//! rank-one update of the Kac-Murdock-Szego matrix `A_lambda`:
//!
//! ```text
//! R = (A_lambda + c J) / (1 + c),     A_lambda^{-1} = X_lambda / (1 - lambda^2)
//! ```
//!
//! with `X_lambda` tridiagonal. Sherman-Morrison then gives `R^{-1}` and the
//! coefficients `w_n = R^{-1} gamma_n` in closed form. A dense
//! factorization path is kept as the reference.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cost::beta;
use crate::model::{ExpModel, LAMBDA_MAX};
use crate::numeric::one_minus_exp;
use crate::pattern::PilotPattern;
use crate::{Error, Result};

/// Condition estimate above which the Cholesky path hands over to LU.
const CHOLESKY_COND_LIMIT: f64 = 1e12;
/// Pivot ratio below which the pilot matrix is declared singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct WienerCoefficients {
    /// Row `n - 1` holds `w_n`; `N x N_P`.
    pub weights: DMatrix<f64>,
    pub pattern: PilotPattern,
    pub model: ExpModel,
}

impl WienerCoefficients {
    /// `w_n` for 1-based position `n`.
    pub fn row(&self, n: usize) -> Vec<f64> {
        self.weights.row(n - 1).iter().copied().collect()
    }

    pub fn max_abs_diff(&self, other: &WienerCoefficients) -> f64 {
        (&self.weights - &other.weights).amax()
    }
}

/// `gamma_n`: correlation between position `n` and every pilot.
pub fn correlation_vector(model: &ExpModel, pattern: &PilotPattern, n: usize) -> DVector<f64> {
    DVector::from_iterator(
        pattern.n_pilots,
        pattern
            .positions()
            .map(|p| model.gamma_e(n as i64 - p as i64)),
    )
}

/// `R_{i,j} = gamma_E(p_j - p_i)`.
pub fn pilot_matrix(model: &ExpModel, pattern: &PilotPattern) -> DMatrix<f64> {
    let np = pattern.n_pilots;
    DMatrix::from_fn(np, np, |i, j| {
        model.gamma_e((j as i64 - i as i64) * pattern.delta as i64)
    })
}

/// Kac-Murdock-Szego matrix `[lambda^{|i-j|}]`.
pub fn kms_matrix(lambda: f64, size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| lambda.powi(i.abs_diff(j) as i32))
}

/// Tridiagonal `X_lambda` with `A_lambda X_lambda = (1 - lambda^2) I`.
pub fn kms_tridiagonal(lambda: f64, size: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(size, size);
    for i in 0..size {
        x[(i, i)] = if i == 0 || i + 1 == size {
            1.0
        } else {
            1.0 + lambda * lambda
        };
        if i + 1 < size {
            x[(i, i + 1)] = -lambda;
            x[(i + 1, i)] = -lambda;
        }
    }
    x
}

/// `s = [1, 1-lambda, ..., 1-lambda, 1]`, i.e. `(1 + lambda) A_lambda^{-1} u`.
pub fn edge_vector(lambda: f64, size: usize) -> DVector<f64> {
    DVector::from_fn(size, |i, _| {
        if i == 0 || i + 1 == size {
            1.0
        } else {
            1.0 - lambda
        }
    })
}

/// `Y_lambda = s s^T`.
pub fn rank_one_block(lambda: f64, size: usize) -> DMatrix<f64> {
    let s = edge_vector(lambda, size);
    &s * s.transpose()
}

/// `rho_lambda = lambda c (2 - N_P) + c N_P`.
pub fn rho_lambda(c: f64, lambda: f64, n_pilots: usize) -> f64 {
    let np = n_pilots as f64;
    lambda * c * (2.0 - np) + c * np
}

fn checked_lambda(model: &ExpModel, pattern: &PilotPattern) -> Result<f64> {
    let lambda = model.lambda(pattern.delta);
    if lambda >= LAMBDA_MAX {
        return Err(Error::domain(format!(
            "lambda = e^(-a delta) must be below 1 (a = {}, delta = {})",
            model.a, pattern.delta
        )));
    }
    Ok(lambda)
}

/// Closed-form `R^{-1}`:
/// `(1+c)/(1+lambda) * (X/(1-lambda) - c Y / (1 + lambda + rho_lambda))`.
pub fn invert_pilot_matrix_closed(
    model: &ExpModel,
    pattern: &PilotPattern,
) -> Result<DMatrix<f64>> {
    if pattern.n_pilots == 1 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    let lambda = checked_lambda(model, pattern)?;
    let np = pattern.n_pilots;
    let c = model.c();
    let one_minus_lambda = one_minus_exp(-model.a * pattern.delta as f64);
    let x = kms_tridiagonal(lambda, np) / one_minus_lambda;
    let y = rank_one_block(lambda, np) * (c / (1.0 + lambda + rho_lambda(c, lambda, np)));
    Ok((x - y) * ((1.0 + c) / (1.0 + lambda)))
}

/// Closed-form coefficients. Needs `N_P >= 3`; smaller patterns report
/// [`Error::FallbackToNumeric`].
pub fn coefficients_closed(model: &ExpModel, pattern: &PilotPattern) -> Result<WienerCoefficients> {
    let np = pattern.n_pilots;
    if np < 3 {
        return Err(Error::FallbackToNumeric { n_pilots: np });
    }
    let lambda = checked_lambda(model, pattern)?;
    let a = model.a;
    let c = model.c();
    let rho = rho_lambda(c, lambda, np);
    let one_minus_lambda_sq = one_minus_exp(-2.0 * a * pattern.delta as f64);
    let scale = c / ((1.0 + lambda) * (1.0 + lambda + rho));
    let positions: Vec<usize> = pattern.positions().collect();

    let rows: Vec<Vec<f64>> = (1..=pattern.n_total)
        .into_par_iter()
        .map(|n| {
            let g: Vec<f64> = positions
                .iter()
                .map(|&p| (-a * n.abs_diff(p) as f64).exp())
                .collect();
            let kappa = scale * (1.0 + lambda - beta(model, pattern, n));
            (0..np)
                .map(|j| {
                    let v = if j == 0 {
                        g[0] - lambda * g[1]
                    } else if j + 1 == np {
                        g[np - 1] - lambda * g[np - 2]
                    } else {
                        (1.0 + lambda * lambda) * g[j] - lambda * (g[j - 1] + g[j + 1])
                    };
                    let s = if j == 0 || j + 1 == np {
                        1.0
                    } else {
                        1.0 - lambda
                    };
                    kappa * s + v / one_minus_lambda_sq
                })
                .collect()
        })
        .collect();

    Ok(WienerCoefficients {
        weights: DMatrix::from_row_iterator(pattern.n_total, np, rows.into_iter().flatten()),
        pattern: *pattern,
        model: *model,
    })
}

/// Reference coefficients: dense solve of `R w_n = gamma_n` for every `n`.
/// The factorization is shared; right-hand sides are solved in parallel blocks.
pub fn coefficients_numeric(
    model: &ExpModel,
    pattern: &PilotPattern,
) -> Result<WienerCoefficients> {
    const BLOCK: usize = 128;
    let np = pattern.n_pilots;
    let r = pilot_matrix(model, pattern);
    let singular = || Error::SingularModel {
        a: model.a,
        b: model.b,
        delta: pattern.delta,
        n_pilots: np,
    };
    // Columns are gamma_n for n = start + 1 ..
    let rhs = |start: usize, len: usize| {
        DMatrix::from_fn(np, len, |j, k| {
            model.gamma_e((start + k + 1) as i64 - pattern.position(j + 1) as i64)
        })
    };
    let starts: Vec<usize> = (0..pattern.n_total).step_by(BLOCK).collect();
    let len = |start: usize| BLOCK.min(pattern.n_total - start);

    let blocks: Vec<DMatrix<f64>> = match r.clone().cholesky() {
        Some(chol) if cholesky_condition(&chol.l()) <= CHOLESKY_COND_LIMIT => starts
            .par_iter()
            .map(|&s| chol.solve(&rhs(s, len(s))))
            .collect(),
        _ => {
            let lu = r.lu();
            let diag = lu.u().diagonal().abs();
            if diag.min() <= SINGULAR_PIVOT_RATIO * diag.max() {
                return Err(singular());
            }
            starts
                .par_iter()
                .map(|&s| lu.solve(&rhs(s, len(s))).ok_or_else(singular))
                .collect::<Result<_>>()?
        }
    };
    let mut weights = DMatrix::zeros(pattern.n_total, np);
    for (&s, block) in starts.iter().zip(&blocks) {
        if block.iter().any(|w| !w.is_finite()) {
            return Err(singular());
        }
        weights
            .rows_mut(s, block.ncols())
            .copy_from(&block.transpose());
    }
    Ok(WienerCoefficients {
        weights,
        pattern: *pattern,
        model: *model,
    })
}

/// Cheap 2-norm condition estimate from the Cholesky factor diagonal.
fn cholesky_condition(l: &DMatrix<f64>) -> f64 {
    let d = l.diagonal().abs();
    let ratio = d.max() / d.min();
    ratio * ratio
}

/// `alpha_hat_n = w_n^T alpha_tilde_p` for every position.
pub fn interpolate(
    coeffs: &WienerCoefficients,
    pilot_estimates: &[Complex64],
) -> Result<Vec<Complex64>> {
    let np = coeffs.pattern.n_pilots;
    if pilot_estimates.len() != np {
        return Err(Error::domain(format!(
            "expected {np} pilot estimates, got {}",
            pilot_estimates.len()
        )));
    }
    Ok(coeffs
        .weights
        .row_iter()
        .map(|w| w.iter().zip(pilot_estimates).map(|(&w, &p)| p * w).sum())
        .collect())
}
