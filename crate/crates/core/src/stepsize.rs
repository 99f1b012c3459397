//! Trial stepsize selection: carry-over or Barzilai-Borwein (long step).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepsizeStrategy {
    /// Reuse the last accepted stepsize.
    Plain,
    /// `<dx, dx> / <dx, dg>` from the last accepted pair of iterates.
    Spectral,
}

impl StepsizeStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            StepsizeStrategy::Plain => "plain",
            StepsizeStrategy::Spectral => "spectral",
        }
    }
}

/// Barzilai-Borwein estimate `<dx, dx> / <dx, dg>`; `None` when `dx = 0` or
/// the curvature `<dx, dg>` is not positive.
pub fn bb_stepsize(dx: &[f64], dg: &[f64]) -> Option<f64> {
    let ss: f64 = dx.iter().map(|v| v * v).sum();
    let sy: f64 = dx.iter().zip(dg).map(|(a, b)| a * b).sum();
    if ss == 0.0 || !(sy > 0.0) {
        return None;
    }
    let gamma = ss / sy;
    gamma.is_finite().then_some(gamma)
}

/// Per-solve stepsize state.
#[derive(Debug, Clone)]
pub struct StepsizeRule {
    strategy: StepsizeStrategy,
    initial: f64,
    gamma_min: f64,
    gamma_max: f64,
    last_accepted: Option<f64>,
    spectral_estimate: Option<f64>,
}

impl StepsizeRule {
    pub fn new(strategy: StepsizeStrategy, initial: f64, gamma_min: f64, gamma_max: f64) -> Self {
        StepsizeRule {
            strategy,
            initial,
            gamma_min,
            gamma_max,
            last_accepted: None,
            spectral_estimate: None,
        }
    }

    /// Trial stepsize for the next outer iteration, always in `[gamma_min, gamma_max]`.
    pub fn propose(&self) -> f64 {
        let raw = match (self.strategy, self.last_accepted) {
            (_, None) => self.initial,
            (StepsizeStrategy::Plain, Some(prev)) => prev,
            (StepsizeStrategy::Spectral, Some(prev)) => self.spectral_estimate.unwrap_or(prev),
        };
        raw.clamp(self.gamma_min, self.gamma_max)
    }

    /// Registers an accepted step `x_new - x_prev` with gradient change `dg`,
    /// taken with stepsize `gamma`.
    pub fn record_accepted(&mut self, gamma: f64, dx: &[f64], dg: &[f64]) {
        self.last_accepted = Some(gamma);
        if self.strategy == StepsizeStrategy::Spectral {
            self.spectral_estimate = bb_stepsize(dx, dg);
        }
    }
}
