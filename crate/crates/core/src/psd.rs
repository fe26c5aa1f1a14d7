//! Pole/zero oscillator phase-noise PSD, scalable with carrier frequency.
//!
//! The single-sideband level at offset `f` is
//!
//! ```text
//! L(f) = psd0 * prod_z (1 + (f/f_z)^2)^{k_z} / prod_p (1 + (f/f_p)^2)^{k_p}
//! ```
//!
//! so a pole of order `k` rolls off at `-20 k` dB/decade above its corner,
//! and `psd0` is the low-offset plateau at the reference carrier. Moving to
//! another carrier adds `20 log10(F_c / F_ref)` dB at every offset.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub corner_hz: f64,
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdSpec {
    pub ref_carrier_hz: f64,
    /// Plateau level in dBc/Hz. `f64::NEG_INFINITY` means no phase noise.
    pub psd0_db: f64,
    #[serde(default)]
    pub poles: Vec<Corner>,
    #[serde(default)]
    pub zeros: Vec<Corner>,
}

impl PsdSpec {
    /// Oscillator profile shipped as the default configuration: one
    /// first-order pole, so the phase is an Ornstein-Uhlenbeck process whose
    /// `e^{i phi}` autocorrelation is close to an exponential decaying onto
    /// a floor. Calibrated at 100 GHz on a 983.04 MHz sample grid.
    pub fn default_profile() -> Self {
        PsdSpec {
            ref_carrier_hz: 100e9,
            psd0_db: -82.0,
            poles: vec![Corner {
                corner_hz: 1.17e6,
                order: 1.0,
            }],
            zeros: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ref_carrier_hz.is_finite() && self.ref_carrier_hz > 0.0) {
            return Err(Error::domain(format!(
                "reference carrier must be positive and finite, got {}",
                self.ref_carrier_hz
            )));
        }
        if self.psd0_db.is_nan() || self.psd0_db == f64::INFINITY {
            return Err(Error::domain("psd0_db must be finite or -inf"));
        }
        for c in self.poles.iter().chain(&self.zeros) {
            if !(c.corner_hz.is_finite() && c.corner_hz > 0.0) {
                return Err(Error::domain(format!(
                    "corner frequency must be positive and finite, got {}",
                    c.corner_hz
                )));
            }
            if !(c.order.is_finite() && c.order > 0.0) {
                return Err(Error::domain(format!(
                    "corner order must be positive, got {}",
                    c.order
                )));
            }
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.psd0_db == f64::NEG_INFINITY
    }

    /// PSD level in dBc/Hz at `offset_hz` for carrier `carrier_hz`.
    pub fn psd_at(&self, offset_hz: f64, carrier_hz: f64) -> Result<f64> {
        if !(offset_hz > 0.0) {
            return Err(Error::domain(format!(
                "PSD offset must be positive, got {offset_hz}"
            )));
        }
        if !(carrier_hz > 0.0) {
            return Err(Error::domain(format!(
                "carrier must be positive, got {carrier_hz}"
            )));
        }
        Ok(self.level_db(offset_hz, carrier_hz))
    }

    fn level_db(&self, offset_hz: f64, carrier_hz: f64) -> f64 {
        let shape = |corners: &[Corner]| -> f64 {
            corners
                .iter()
                .map(|c| {
                    10.0 * c.order * (offset_hz / c.corner_hz).powi(2).ln_1p()
                        / std::f64::consts::LN_10
                })
                .sum()
        };
        self.psd0_db + shape(&self.zeros) - shape(&self.poles)
            + 20.0 * (carrier_hz / self.ref_carrier_hz).log10()
    }

    /// Linear PSD (1/Hz) at `offset_hz`; zero at DC and for a silent spec.
    pub fn linear(&self, offset_hz: f64, carrier_hz: f64) -> f64 {
        if self.is_silent() || offset_hz <= 0.0 {
            return 0.0;
        }
        10f64.powf(self.level_db(offset_hz, carrier_hz) / 10.0)
    }
}
