//! Phase-noise aware pilot placement for single-carrier OFDM symbols.
//!
//! Phase-noise traces are synthesized from a PSD, their autocorrelation is
//! fitted with an exponential-plus-floor model, and the model drives a
//! Wiener interpolator over uniformly spaced pilots. The interpolation cost
//! has closed forms that make spacing sweeps and pilot planning cheap.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocorr;
pub mod cost;
mod error;
pub mod io;
pub mod model;
pub mod numeric;
pub mod pattern;
pub mod planner;
pub mod psd;
pub mod reference;
pub mod sim;
pub mod synth;
pub mod wiener;

pub use error::{Error, Result};
