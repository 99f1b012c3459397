//! Merit values for the nonmonotone line search and its acceptance test.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeritFlavor {
    /// Merit is the current objective (averaging with weight one).
    Monotone,
    /// `Phi_k = (1 - p) Phi_{k-1} + p phi(x^k)`.
    Average,
    /// Maximum of the objective over the last `M + 1` accepted iterates.
    Max,
}

impl MeritFlavor {
    pub fn name(&self) -> &'static str {
        match self {
            MeritFlavor::Monotone => "monotone",
            MeritFlavor::Average => "average",
            MeritFlavor::Max => "max",
        }
    }

    /// Averaging weight actually used by this flavor, if it averages.
    pub fn averaging_weight(&self, p: f64) -> Option<f64> {
        match self {
            MeritFlavor::Monotone => Some(1.0),
            MeritFlavor::Average => Some(p),
            MeritFlavor::Max => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeritState {
    flavor: MeritFlavor,
    weight: f64,
    memory: usize,
    value: f64,
    history: VecDeque<f64>,
}

impl MeritState {
    /// `Phi_0 = phi(x^0)`; fails when the start is infeasible.
    pub fn init(flavor: MeritFlavor, p: f64, memory: usize, phi0: f64) -> Result<Self> {
        if phi0 == f64::INFINITY {
            return Err(Error::InfeasibleStart);
        }
        if !phi0.is_finite() {
            return Err(Error::OracleFault {
                oracle: "phi",
                detail: format!("initial objective {phi0}"),
            });
        }
        let weight = flavor.averaging_weight(p).unwrap_or(1.0);
        let mut history = VecDeque::with_capacity(memory + 1);
        if flavor == MeritFlavor::Max {
            history.push_back(phi0);
        }
        Ok(MeritState {
            flavor,
            weight,
            memory,
            value: phi0,
            history,
        })
    }

    pub fn flavor(&self) -> MeritFlavor {
        self.flavor
    }

    /// Current merit `Phi_k`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Stored window of accepted objective values (max flavor only).
    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    /// Folds an accepted objective value into the merit.
    pub fn update(&mut self, phi_new: f64) {
        match self.flavor {
            MeritFlavor::Monotone | MeritFlavor::Average => {
                self.value = (1.0 - self.weight) * self.value + self.weight * phi_new;
            }
            MeritFlavor::Max => {
                if self.history.len() == self.memory + 1 {
                    self.history.pop_front();
                }
                self.history.push_back(phi_new);
                self.value = self
                    .history
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
    }
}

/// Line-search acceptance: `phi_new <= merit_prev - (1 - alpha) / (2 gamma) * step_sq`.
pub fn accept(phi_new: f64, merit_prev: f64, gamma: f64, alpha: f64, step_sq: f64) -> bool {
    phi_new <= merit_prev - (1.0 - alpha) / (2.0 * gamma) * step_sq
}
