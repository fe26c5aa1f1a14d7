//! Built-in exponential-model parameters across the sub-THz band.
//!
//! Fitted `(a, b)` pairs at 25 GHz steps from 100 to 300 GHz, used when no
//! model file is supplied. Values in between are interpolated linearly in
//! the carrier frequency.

use crate::model::ExpModel;
use crate::{Error, Result};

pub const FC_MIN_HZ: f64 = 100e9;
pub const FC_MAX_HZ: f64 = 300e9;

/// `(fc_hz, a, b)`.
pub const ANCHORS: [(f64, f64, f64); 9] = [
    (100e9, 0.007_358_421_180_748_1, 0.977_392_014_811_171),
    (125e9, 0.007_346_299_670_739_07, 0.966_574_933_915_861),
    (150e9, 0.007_381_750_924_698_57, 0.952_307_810_722_5),
    (175e9, 0.007_434_152_440_394_27, 0.935_660_078_597_687),
    (200e9, 0.007_479_311_881_511_21, 0.916_695_791_037_974),
    (225e9, 0.007_545_590_368_632_51, 0.895_829_639_832_946),
    (250e9, 0.007_637_535_970_530_37, 0.873_069_155_562_889),
    (275e9, 0.007_728_603_372_849_04, 0.848_633_558_517_872),
    (300e9, 0.007_806_003_241_171_15, 0.822_455_737_742_35),
];

/// Reference model at `fc_hz`, within `[100, 300]` GHz.
pub fn model_at(fc_hz: f64) -> Result<ExpModel> {
    if !(FC_MIN_HZ..=FC_MAX_HZ).contains(&fc_hz) {
        return Err(Error::domain(format!(
            "no reference model at {fc_hz} Hz; supported range is [{FC_MIN_HZ}, {FC_MAX_HZ}] Hz"
        )));
    }
    let i = ANCHORS
        .windows(2)
        .position(|w| fc_hz <= w[1].0)
        .unwrap_or(ANCHORS.len() - 2);
    let (f0, a0, b0) = ANCHORS[i];
    let (f1, a1, b1) = ANCHORS[i + 1];
    let t = (fc_hz - f0) / (f1 - f0);
    Ok(ExpModel::new(a0 + t * (a1 - a0), b0 + t * (b1 - b0))?.with_carrier(fc_hz))
}
