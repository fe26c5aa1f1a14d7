//! Interpolation cost `J = sum_n E|alpha_n - alpha_hat_n|^2 = N - sum_n w_n^T gamma_n`.
//!
//! Three evaluations are provided: a dense reference that sums the
//! per-position residuals, a closed form built from the sums of `beta_n`
//! over the symbol, and the same closed form regrouped as a quasi-polynomial
//! in `lambda`. All exponentials are merged before evaluation so that no
//! intermediate `lambda^{-N_P}` overflows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ExpModel, LAMBDA_MAX};
use crate::numeric::{exp_merged, one_minus_exp, pairwise_sum};
use crate::pattern::{FirstPilot, PilotPattern};
use crate::wiener::{coefficients_numeric, correlation_vector, rho_lambda};
use crate::{Error, Result};

/// Costs this far below zero (relative to `N`) are rounding noise and are
/// reported as zero; anything more negative is an error.
const NEGATIVE_ROUNDING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMethod {
    Numeric,
    #[default]
    Boxed,
    Quasipoly,
}

impl fmt::Display for CostMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMethod::Numeric => "numeric",
            CostMethod::Boxed => "boxed",
            CostMethod::Quasipoly => "quasipoly",
        })
    }
}

impl FromStr for CostMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(CostMethod::Numeric),
            "boxed" => Ok(CostMethod::Boxed),
            "quasipoly" => Ok(CostMethod::Quasipoly),
            _ => Err(Error::Parse(format!(
                "unknown cost method '{s}' (numeric, boxed, quasipoly)"
            ))),
        }
    }
}

/// Sums over the symbol that enter the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub sum_beta: f64,
    pub sum_beta_sq: f64,
    /// `2 (1 + lambda) sum beta - sum beta^2`.
    pub j_beta: f64,
    /// `sum_n v_n^T gamma_n^(0)`.
    pub sum_v_gamma: f64,
    pub rho_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n_total: usize,
    pub j_abs: f64,
    pub j_pct: f64,
    /// Method that produced the value.
    pub method: CostMethod,
    /// Set when the requested closed form was replaced by the dense path.
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<CostTerms>,
}

/// `lambda` together with its complements, evaluated without cancellation.
#[derive(Debug, Clone, Copy)]
struct Lam {
    lambda: f64,
    one_minus: f64,
    one_minus_sq: f64,
}

fn lam(model: &ExpModel, pattern: &PilotPattern) -> Result<Lam> {
    let x = model.a * pattern.delta as f64;
    let lambda = (-x).exp();
    if lambda >= LAMBDA_MAX {
        return Err(Error::SingularFactor {
            factor: "1 - lambda",
            a: model.a,
            lambda,
        });
    }
    Ok(Lam {
        lambda,
        one_minus: one_minus_exp(-x),
        one_minus_sq: one_minus_exp(-2.0 * x),
    })
}

fn need_closed_form(model: &ExpModel, pattern: &PilotPattern) -> Result<Lam> {
    if pattern.n_pilots < 3 {
        return Err(Error::FallbackToNumeric {
            n_pilots: pattern.n_pilots,
        });
    }
    if model.a * 2.0 >= f64::MAX.ln() {
        return Err(Error::SingularFactor {
            factor: "1 - e^(2a)",
            a: model.a,
            lambda: 0.0,
        });
    }
    lam(model, pattern)
}

/// `beta_n = s^T gamma_n^(0)` with `gamma_n^(0)_j = e^{-a|n - p_j|}`, `n` 1-based.
pub fn beta(model: &ExpModel, pattern: &PilotPattern, n: usize) -> f64 {
    let a = model.a;
    let p1 = pattern.p1 as f64;
    let nf = n as f64;
    if pattern.n_pilots == 1 {
        return (-a * (nf - p1).abs()).exp();
    }
    let ad = a * pattern.delta as f64;
    let one_plus_lambda = 1.0 + (-ad).exp();
    if n < pattern.p1 {
        (-a * (p1 - nf)).exp() * one_plus_lambda
    } else if n < pattern.last() {
        let k = pattern.kp(n) as f64;
        exp_merged(-a * (nf - p1) + ad * (k - 1.0)) + exp_merged(-a * (p1 - nf) - ad * k)
    } else {
        let np = pattern.n_pilots as f64;
        exp_merged(-a * (nf - p1) + ad * (np - 1.0)) * one_plus_lambda
    }
}

/// Exponents shared by the closed forms.
struct Edges {
    /// `a (p1 - 1)`: distance from the symbol start to the first pilot.
    head: f64,
    /// `a (N - p_NP)`: distance from the last pilot to the symbol end.
    tail: f64,
}

fn edges(model: &ExpModel, pattern: &PilotPattern) -> Edges {
    Edges {
        head: model.a * (pattern.p1 - 1) as f64,
        tail: model.a * (pattern.n_total - pattern.last()) as f64,
    }
}

/// Closed-form sums over `n = 1..N`. Needs `N_P >= 3`.
pub fn cost_terms(model: &ExpModel, pattern: &PilotPattern) -> Result<CostTerms> {
    let l = need_closed_form(model, pattern)?;
    let a = model.a;
    let np = pattern.n_pilots as f64;
    let delta = pattern.delta as f64;
    let e = edges(model, pattern);
    let one_plus = 1.0 + l.lambda;
    let g1 = one_minus_exp(-a);
    let g2 = one_minus_exp(-2.0 * a);

    // Geometric sums before the first pilot, between pilots, after the last.
    let head1 = (-a).exp() * one_minus_exp(-e.head) / g1;
    let head2 = (-2.0 * a).exp() * one_minus_exp(-2.0 * e.head) / g2;
    let tail1 = one_minus_exp(-e.tail - a) / g1;
    let tail2 = one_minus_exp(-2.0 * e.tail - 2.0 * a) / g2;
    let cell1 = l.one_minus * (1.0 + (-a).exp()) / g1;
    let cell2 = l.one_minus_sq * (1.0 + (-2.0 * a).exp()) / g2;

    let sum_beta = one_plus * head1 + (np - 1.0) * cell1 + one_plus * tail1;
    let sum_beta_sq =
        one_plus * one_plus * (head2 + tail2) + (np - 1.0) * (cell2 + 2.0 * delta * l.lambda);
    let sum_v_gamma =
        l.one_minus_sq * (head2 + tail2) + (np - 1.0) * (cell2 - 2.0 * delta * l.lambda * l.lambda);

    Ok(CostTerms {
        sum_beta,
        sum_beta_sq,
        j_beta: 2.0 * one_plus * sum_beta - sum_beta_sq,
        sum_v_gamma,
        rho_lambda: rho_lambda(model.c(), l.lambda, pattern.n_pilots),
    })
}

/// `J` assembled from [`CostTerms`]:
/// `N - (c (J_beta + rho (1 + lambda) N) / ((1 + lambda)(1 + lambda + rho)) + sum v gamma / (1 - lambda^2)) / (1 + c)`.
pub fn cost_from_terms(model: &ExpModel, pattern: &PilotPattern, terms: &CostTerms) -> Result<f64> {
    let l = need_closed_form(model, pattern)?;
    let c = model.c();
    let n = pattern.n_total as f64;
    let one_plus = 1.0 + l.lambda;
    let rho = terms.rho_lambda;
    let explained = c * (terms.j_beta + rho * one_plus * n) / (one_plus * (one_plus + rho))
        + terms.sum_v_gamma / l.one_minus_sq;
    Ok(n - explained / (1.0 + c))
}

/// Closed-form `J` in absolute units. Needs `N_P >= 3`.
pub fn cost_boxed(model: &ExpModel, pattern: &PilotPattern) -> Result<f64> {
    let l = need_closed_form(model, pattern)?;
    let a = model.a;
    let c = model.c();
    let n = pattern.n_total as f64;
    let np = pattern.n_pilots as f64;
    let delta = pattern.delta as f64;
    let lambda = l.lambda;
    let e = edges(model, pattern);

    let ea = a.exp();
    let one_minus_ea = -a.exp_m1();
    let one_minus_e2a = -(2.0 * a).exp_m1();
    let x = one_minus_ea * one_minus_ea + 6.0 * ea;
    let rho = rho_lambda(c, lambda, pattern.n_pilots);
    // rho / c, kept separate so that c = 0 is well defined.
    let rho_over_c = lambda * (2.0 - np) + np;
    let d1 = 1.0 + lambda + rho;

    let e1 = (-e.head).exp();
    let e2 = (-2.0 * e.head).exp();
    let f1 = (-e.tail).exp();
    let f2 = (-2.0 * e.tail).exp();
    let q = 2.0 * e1 + 2.0 * f1 - (e2 + f2) / (1.0 + ea);
    let t2 = (e2 - np * (ea * ea + 1.0) + f2) / one_minus_e2a;

    let pilot_part = (c / d1) * (rho * n - rho_over_c * x / one_minus_e2a)
        + (c / d1) * (1.0 + lambda) / one_minus_ea * q;
    let cell_part =
        lambda / (1.0 + lambda) * 2.0 * delta * (np - 1.0) * (c / d1 + lambda / l.one_minus);
    Ok(n - (pilot_part + t2 - cell_part) / (1.0 + c))
}

/// One term `coef * lambda^power * e^{shift}` of the quasi-polynomial numerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub power: i64,
    pub coef: f64,
    /// Log-scale factor merged with `lambda^power` before exponentiating.
    pub shift: f64,
}

/// `J = N - J^N / ((1 + c) J^D)` with `J^N` a sum of powers of `lambda`
/// (including negative ones) plus a `log(lambda) / a` block, and `J^D` a cubic.
///
/// The power monomials come in pairs `k (lambda^{p+2} - lambda^p)`; `pairs`
/// stores one entry per pair with `power = p`, so that the factor
/// `lambda^2 - 1` can be evaluated once without cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiPolynomial {
    pub pairs: Vec<Monomial>,
    /// Coefficients of `lambda^3, lambda^2, lambda` multiplying `log(lambda) / a`.
    pub log_block: [f64; 3],
    /// Coefficients of `lambda^3, lambda^2, lambda, 1`.
    pub denominator: [f64; 4],
}

impl QuasiPolynomial {
    pub fn build(model: &ExpModel, pattern: &PilotPattern) -> Result<Self> {
        need_closed_form(model, pattern)?;
        let a = model.a;
        let c = model.c();
        let n = pattern.n_total as f64;
        let np = pattern.n_pilots as f64;
        let npi = pattern.n_pilots as i64;
        let head = edges(model, pattern).head;
        let ea = a.exp();
        let one_minus_ea = -a.exp_m1();
        let one_minus_e2a = -(2.0 * a).exp_m1();
        let x = one_minus_ea * one_minus_ea + 6.0 * ea;
        let e1 = (-head).exp();
        let e2 = (-2.0 * head).exp();
        let cells = np * (ea * ea + 1.0);

        let j3 = c * c * n * (np - 2.0)
            + ((1.0 + c * (2.0 - np)) * (cells - e2)
                - c * (np - 2.0) * x
                - 2.0 * c * e1 * (ea + 1.0)
                + c * e2)
                / one_minus_e2a;
        let j2 = c * np * x / one_minus_e2a - c * c * np * n
            + c / one_minus_ea * (e2 / (ea + 1.0) - 2.0 * e1)
            + (1.0 + c * np) / one_minus_e2a * (cells - e2);

        // Tail monomials carry e^{-a(N - p1)}; merge it as a shift.
        let s1 = -a * (pattern.n_total - pattern.p1) as f64;
        let s2 = 2.0 * s1;
        let j4 = 2.0 * c / a.exp_m1();
        let j5 = (1.0 + c * (1.0 - np)) / (2.0 * a).exp_m1();
        let j6 = (1.0 + c * (np - 1.0)) / (2.0 * a).exp_m1();

        let mono = |power, coef, shift| Monomial { power, coef, shift };
        let pairs = vec![
            mono(1, j3, 0.0),
            mono(0, j2, 0.0),
            mono(2 - npi, j4, s1),
            mono(1 - npi, j4, s1),
            mono(3 - 2 * npi, j5, s2),
            mono(2 - 2 * npi, j6, s2),
        ];
        let k = 2.0 * (np - 1.0);
        let log_block = [
            k * (1.0 + c * (2.0 - np)),
            k * (1.0 + c * (np - 1.0)),
            k * c,
        ];
        let d3 = c * (np - 2.0) - 1.0;
        let d2 = -(1.0 + c * np);
        Ok(Self {
            pairs,
            log_block,
            denominator: [d3, d2, -d3, -d2],
        })
    }

    /// The numerator's power monomials one by one, highest power first.
    pub fn monomials(&self) -> Vec<Monomial> {
        let mut out: Vec<Monomial> = self
            .pairs
            .iter()
            .flat_map(|m| {
                [
                    Monomial {
                        power: m.power + 2,
                        ..*m
                    },
                    Monomial {
                        coef: -m.coef,
                        ..*m
                    },
                ]
            })
            .collect();
        out.sort_by_key(|m| std::cmp::Reverse(m.power));
        out
    }

    /// `sum_pairs coef lambda^p e^{shift}`, i.e. the power part of `J^N`
    /// divided by `lambda^2 - 1`.
    fn pair_sum(&self, a: f64, delta: usize) -> f64 {
        let ad = a * delta as f64;
        let terms: Vec<f64> = self
            .pairs
            .iter()
            .map(|m| m.coef * exp_merged(m.shift - ad * m.power as f64))
            .collect();
        pairwise_sum(&terms)
    }

    fn log_part(&self, a: f64, delta: usize) -> f64 {
        let lambda = (-a * delta as f64).exp();
        let [l3, l2, l1] = self.log_block;
        // log(lambda) / a = -delta.
        -(delta as f64) * lambda * (l1 + lambda * (l2 + lambda * l3))
    }

    pub fn numerator_at(&self, a: f64, delta: usize) -> f64 {
        let lambda_sq_minus_one = (-2.0 * a * delta as f64).exp_m1();
        self.pair_sum(a, delta) * lambda_sq_minus_one + self.log_part(a, delta)
    }

    pub fn denominator_at(&self, a: f64, delta: usize) -> f64 {
        let lambda = (-a * delta as f64).exp();
        let [d3, d2, d1, d0] = self.denominator;
        ((d3 * lambda + d2) * lambda + d1) * lambda + d0
    }
}

/// Quasi-polynomial evaluation of `J`. Needs `N_P >= 3`.
pub fn cost_quasipoly(model: &ExpModel, pattern: &PilotPattern) -> Result<f64> {
    let q = QuasiPolynomial::build(model, pattern)?;
    let (a, delta) = (model.a, pattern.delta);
    let lambda = (-a * delta as f64).exp();
    let lambda_sq_minus_one = (-2.0 * a * delta as f64).exp_m1();
    // J^D = (lambda^2 - 1)(d3 lambda + d2); divide that factor out of both parts.
    let [d3, d2, _, _] = q.denominator;
    let reduced_num = q.pair_sum(a, delta) + q.log_part(a, delta) / lambda_sq_minus_one;
    let reduced_den = (1.0 + model.c()) * (d3 * lambda + d2);
    Ok(pattern.n_total as f64 - reduced_num / reduced_den)
}

/// `J_n = 1 - w_n^T gamma_n` from the dense solve.
pub fn per_position_cost(model: &ExpModel, pattern: &PilotPattern) -> Result<Vec<f64>> {
    let w = coefficients_numeric(model, pattern)?;
    Ok((1..=pattern.n_total)
        .into_par_iter()
        .map(|n| {
            let g = correlation_vector(model, pattern, n);
            1.0 - w.weights.row(n - 1).transpose().dot(&g)
        })
        .collect())
}

/// Dense reference `J = sum_n J_n`.
pub fn cost_numeric(model: &ExpModel, pattern: &PilotPattern) -> Result<f64> {
    Ok(pairwise_sum(&per_position_cost(model, pattern)?))
}

fn checked(pattern: &PilotPattern, j: f64) -> Result<f64> {
    let n = pattern.n_total as f64;
    if !j.is_finite() || j < -NEGATIVE_ROUNDING * n || j > n * (1.0 + NEGATIVE_ROUNDING) {
        return Err(Error::domain(format!(
            "cost {j} outside [0, {n}] for delta = {}, n_pilots = {}",
            pattern.delta, pattern.n_pilots
        )));
    }
    Ok(j.clamp(0.0, n))
}

/// Evaluates `J` with `method`, dropping to the dense path when the closed
/// forms do not apply (fewer than three pilots).
pub fn evaluate(
    model: &ExpModel,
    pattern: &PilotPattern,
    method: CostMethod,
) -> Result<CostReport> {
    let closed = match method {
        CostMethod::Numeric => None,
        CostMethod::Boxed => Some(cost_boxed(model, pattern)),
        CostMethod::Quasipoly => Some(cost_quasipoly(model, pattern)),
    };
    let (raw, used, fallback) = match closed {
        None => (cost_numeric(model, pattern)?, CostMethod::Numeric, false),
        Some(Err(Error::FallbackToNumeric { .. })) => {
            (cost_numeric(model, pattern)?, CostMethod::Numeric, true)
        }
        Some(r) => (r?, method, false),
    };
    let j_abs = checked(pattern, raw)?;
    let terms = match used {
        CostMethod::Numeric => None,
        _ => Some(cost_terms(model, pattern)?),
    };
    Ok(CostReport {
        n_total: pattern.n_total,
        j_abs,
        j_pct: 100.0 * j_abs / pattern.n_total as f64,
        method: used,
        fallback,
        terms,
    })
}

/// One row of a spacing sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: usize,
    pub p1: usize,
    pub n_pilots: usize,
    pub j_pct: f64,
    pub method: CostMethod,
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `J(delta)` for every spacing, each with all pilots that fit. Rows come
/// back in input order; a failing spacing yields a row with `error` set.
pub fn cost_vs_spacing(
    model: &ExpModel,
    n_total: usize,
    first: FirstPilot,
    deltas: &[usize],
    method: CostMethod,
) -> Vec<SweepRow> {
    deltas
        .par_iter()
        .map(|&delta| {
            let p1 = first.resolve(delta);
            let outcome = PilotPattern::uniform(n_total, p1, delta)
                .and_then(|p| evaluate(model, &p, method).map(|r| (p, r)));
            match outcome {
                Ok((p, r)) => SweepRow {
                    delta,
                    p1,
                    n_pilots: p.n_pilots,
                    j_pct: r.j_pct,
                    method: r.method,
                    fallback: r.fallback,
                    error: None,
                },
                Err(e) => SweepRow {
                    delta,
                    p1,
                    n_pilots: 0,
                    j_pct: f64::NAN,
                    method,
                    fallback: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
