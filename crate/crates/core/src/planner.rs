//! Pilot spacing planning from the affine cost model `J(delta) ~ omega delta + eta`.
//!
//! All costs are in percent of `N`.

use serde::{Deserialize, Serialize};

use crate::cost::{evaluate, CostMethod};
use crate::model::ExpModel;
use crate::pattern::{FirstPilot, PilotPattern};
use crate::reference::{FC_MAX_HZ, FC_MIN_HZ};
use crate::{Error, Result};

/// Fits with a coefficient of determination below this are rejected.
pub const MIN_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCostFit {
    /// Slope, % of N per sample of spacing.
    pub omega: f64,
    /// Intercept, % of N.
    pub eta: f64,
    pub r2: f64,
    pub delta_range: [f64; 2],
}

/// Least-squares line through `(delta, j_pct)` points.
pub fn fit_affine(points: &[(f64, f64)]) -> Result<LinearCostFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "affine fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain(
            "affine fit needs at least two distinct spacings",
        ));
    }
    let omega = sxy / sxx;
    let eta = my - omega * mx;
    if syy == 0.0 {
        return Err(Error::domain(format!(
            "cost is constant ({my}) over the sweep; r2 is undefined"
        )));
    }
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - omega * p.0 - eta).powi(2))
        .sum();
    let r2 = 1.0 - sse / syy;
    if r2 < MIN_R2 {
        return Err(Error::domain(format!(
            "affine fit rejected: r2 = {r2:.6} < {MIN_R2} (omega = {omega}, eta = {eta})"
        )));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(LinearCostFit {
        omega,
        eta,
        r2,
        delta_range: [lo, hi],
    })
}

/// `omega(fc) = k_omega fc^2`, `eta(fc) = k_eta fc^2`, in % of N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEtaModel {
    pub omega_coef: f64,
    pub eta_coef: f64,
}

impl Default for OmegaEtaModel {
    fn default() -> Self {
        Self {
            omega_coef: 5.03e-25,
            eta_coef: 2.17e-25,
        }
    }
}

impl OmegaEtaModel {
    pub fn at(&self, fc_hz: f64) -> (f64, f64) {
        let f2 = fc_hz * fc_hz;
        (self.omega_coef * f2, self.eta_coef * f2)
    }

    /// Least squares through the origin in `fc^2` over `(fc_hz, omega, eta)` samples.
    pub fn refit(samples: &[(f64, f64, f64)]) -> Result<Self> {
        let sxx: f64 = samples.iter().map(|s| s.0.powi(4)).sum();
        if samples.is_empty() || sxx == 0.0 {
            return Err(Error::domain(
                "quadratic refit needs a nonzero carrier frequency",
            ));
        }
        let so: f64 = samples.iter().map(|s| s.0 * s.0 * s.1).sum();
        let se: f64 = samples.iter().map(|s| s.0 * s.0 * s.2).sum();
        Ok(Self {
            omega_coef: so / sxx,
            eta_coef: se / sxx,
        })
    }
}

/// `(omega, eta)` at `fc_hz` with the default coefficients.
pub fn omega_eta_of_fc(fc_hz: f64) -> (f64, f64) {
    OmegaEtaModel::default().at(fc_hz)
}

/// Warning text when `fc_hz` lies outside the band the coefficients were fitted on.
pub fn fc_warning(fc_hz: f64) -> Option<String> {
    (!(FC_MIN_HZ..=FC_MAX_HZ).contains(&fc_hz))
        .then(|| format!("carrier {fc_hz} Hz outside [100, 300] GHz; omega/eta are extrapolated"))
}

/// `floor((max_cost - eta) / omega)`; infeasible if no spacing of at least one qualifies.
pub fn max_spacing(max_cost_pct: f64, omega: f64, eta: f64) -> Result<usize> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!(
            "omega must be positive, got {omega}"
        )));
    }
    let infeasible = Error::Infeasible {
        max_cost_pct,
        eta_pct: eta,
    };
    if max_cost_pct <= eta {
        return Err(infeasible);
    }
    let mut d = ((max_cost_pct - eta) / omega).floor();
    // Division can land one ulp under an exact integer.
    if omega * (d + 1.0) + eta <= max_cost_pct {
        d += 1.0;
    }
    if d < 1.0 {
        return Err(infeasible);
    }
    Ok(d as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub fc_hz: f64,
    pub n_total: usize,
    pub max_cost_pct: f64,
    pub delta0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMethod {
    #[serde(rename = "affine")]
    Affine,
    #[serde(rename = "affine+exact")]
    AffineExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub fc_hz: f64,
    pub n_total: usize,
    pub max_cost_pct: f64,
    pub delta0: usize,
    pub omega: f64,
    pub eta: f64,
    pub j_at_delta0_pct: f64,
    /// Largest admissible spacing; 0 when no spacing meets the ceiling.
    pub delta_pf: usize,
    /// `ceil(N / delta_pf)`.
    pub n_pilots: usize,
    /// `100 / delta_pf`, the approximate overhead.
    pub overhead_pct: Option<f64>,
    pub overhead_at_delta0_pct: f64,
    pub feasible: bool,
    pub method: PlanMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_j_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Affine plan: `delta_pf = max(delta0, max_spacing)` when `J(delta0)` meets the ceiling.
pub fn plan(request: &PlanRequest, coefs: &OmegaEtaModel) -> Result<PlanResult> {
    let PlanRequest {
        fc_hz,
        n_total,
        max_cost_pct,
        delta0,
    } = *request;
    if delta0 < 1 || n_total < 1 {
        return Err(Error::domain("need delta0 >= 1 and n_total >= 1"));
    }
    let (omega, eta) = coefs.at(fc_hz);
    let j0 = omega * delta0 as f64 + eta;
    let spacing = match max_spacing(max_cost_pct, omega, eta) {
        Ok(d) => d,
        Err(Error::Infeasible { .. }) => 0,
        Err(e) => return Err(e),
    };
    let feasible = j0 <= max_cost_pct;
    let delta_pf = if feasible {
        spacing.max(delta0)
    } else {
        spacing
    };
    let note = (!feasible).then(|| {
        format!(
            "J(delta0) = {j0:.4}% exceeds the {max_cost_pct}% ceiling; meeting it needs spacing {spacing} < delta0 = {delta0}, which violates the overhead constraint"
        )
    });
    Ok(PlanResult {
        fc_hz,
        n_total,
        max_cost_pct,
        delta0,
        omega,
        eta,
        j_at_delta0_pct: j0,
        delta_pf,
        n_pilots: if delta_pf > 0 {
            n_total.div_ceil(delta_pf)
        } else {
            0
        },
        overhead_pct: (delta_pf > 0).then(|| 100.0 / delta_pf as f64),
        overhead_at_delta0_pct: 100.0 / delta0 as f64,
        feasible,
        method: PlanMethod::Affine,
        exact_j_pct: None,
        note,
    })
}

/// Scans the closed-form cost downward from the affine `delta_pf` until the
/// ceiling holds. Never goes below `delta0`.
pub fn refine_exact(
    affine: &PlanResult,
    model: &ExpModel,
    first: FirstPilot,
) -> Result<PlanResult> {
    let mut out = affine.clone();
    out.method = PlanMethod::AffineExact;
    if !affine.feasible {
        return Ok(out);
    }
    let exact = |delta: usize| -> Result<f64> {
        let p = PilotPattern::uniform(affine.n_total, first.resolve(delta), delta)?;
        Ok(evaluate(model, &p, CostMethod::Boxed)?.j_pct)
    };
    let mut delta = affine.delta_pf;
    let mut j = exact(delta)?;
    while j > affine.max_cost_pct && delta > affine.delta0 {
        delta -= 1;
        j = exact(delta)?;
    }
    out.exact_j_pct = Some(j);
    if j > affine.max_cost_pct {
        out.feasible = false;
        out.note = Some(format!(
            "exact cost at delta0 = {} is {j:.4}%, above the {}% ceiling",
            affine.delta0, affine.max_cost_pct
        ));
    }
    out.delta_pf = delta;
    out.n_pilots = affine.n_total.div_ceil(delta);
    out.overhead_pct = Some(100.0 / delta as f64);
    Ok(out)
}
