use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform pilot placement inside a symbol of `n_total` samples.
/// Indices are 1-based: pilot `j` sits at `p1 + (j - 1) * delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPattern {
    pub n_total: usize,
    pub p1: usize,
    pub delta: usize,
    pub n_pilots: usize,
}

/// How the first pilot is placed when only the spacing is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstPilot {
    /// Fixed 1-based index.
    At(usize),
    /// `max(1, delta / 2)`: pilots centred in their spacing cells.
    Centered,
}

impl Default for FirstPilot {
    fn default() -> Self {
        FirstPilot::At(1)
    }
}

impl FirstPilot {
    pub fn resolve(self, delta: usize) -> usize {
        match self {
            FirstPilot::At(p) => p,
            FirstPilot::Centered => (delta / 2).max(1),
        }
    }
}

impl std::str::FromStr for FirstPilot {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" | "centered" => Ok(FirstPilot::Centered),
            _ => s.parse().map(FirstPilot::At).map_err(|_| {
                Error::Parse(format!(
                    "first pilot must be an index or 'center', got '{s}'"
                ))
            }),
        }
    }
}

impl PilotPattern {
    pub fn new(n_total: usize, p1: usize, delta: usize, n_pilots: usize) -> Result<Self> {
        if p1 < 1 {
            return Err(Error::domain("first pilot index is 1-based, got 0"));
        }
        if delta < 1 || n_pilots < 1 {
            return Err(Error::domain(format!(
                "need delta >= 1 and n_pilots >= 1, got delta = {delta}, n_pilots = {n_pilots}"
            )));
        }
        let last = p1 + (n_pilots - 1) * delta;
        if last > n_total {
            return Err(Error::domain(format!(
                "last pilot at {last} lies outside the symbol of length {n_total}"
            )));
        }
        Ok(Self {
            n_total,
            p1,
            delta,
            n_pilots,
        })
    }

    /// All pilots that fit from `p1` on: `floor((N - p1) / delta) + 1`, which
    /// is `ceil(N / delta)` when `p1 = 1`.
    pub fn uniform(n_total: usize, p1: usize, delta: usize) -> Result<Self> {
        if p1 < 1 || p1 > n_total {
            return Err(Error::domain(format!(
                "first pilot {p1} must lie in [1, {n_total}]"
            )));
        }
        if delta < 1 {
            return Err(Error::domain("delta must be at least 1"));
        }
        Self::new(n_total, p1, delta, (n_total - p1) / delta + 1)
    }

    /// Pilot `j` (1-based) position.
    pub fn position(&self, j: usize) -> usize {
        self.p1 + (j - 1) * self.delta
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.n_pilots).map(|j| self.position(j))
    }

    pub fn last(&self) -> usize {
        self.position(self.n_pilots)
    }

    /// Number of pilots at or before position `n`.
    pub fn kp(&self, n: usize) -> usize {
        if n < self.p1 {
            0
        } else {
            ((n - self.p1) / self.delta + 1).min(self.n_pilots)
        }
    }

    /// Index `j` if `n` is a pilot position.
    pub fn pilot_at(&self, n: usize) -> Option<usize> {
        if n < self.p1 || !(n - self.p1).is_multiple_of(self.delta) {
            return None;
        }
        let j = (n - self.p1) / self.delta + 1;
        (j <= self.n_pilots).then_some(j)
    }

    /// Pilot share of the symbol, `N_P / N`.
    pub fn overhead(&self) -> f64 {
        self.n_pilots as f64 / self.n_total as f64
    }
}
