//! Post-hoc verification of solver traces.
//!
//! The first trace row is the baseline (starting point, `Phi_0 = phi(x^0)`);
//! each later row is an accepted iteration. Every check is a pure function
//! of the trace and the solver configuration.

use serde::{Deserialize, Serialize};

use crate::merit::MeritFlavor;
use crate::solver::{IterationRecord, SolverConfig};

/// Relative tolerance for per-iteration inequalities.
pub const REL_TOL: f64 = 1e-10;
/// Absolute tolerance for accumulated sums and rate envelopes.
pub const ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Soft check not satisfied; never counts as a failure.
    Warn,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub status: CheckStatus,
    /// Smallest slack `rhs - lhs` seen (negative means violated).
    pub margin: Option<f64>,
    /// Iteration index `k` where the smallest slack occurred.
    pub index: Option<usize>,
}

impl CheckResult {
    fn new(check: &str, status: CheckStatus) -> Self {
        CheckResult {
            check: check.to_string(),
            status,
            margin: None,
            index: None,
        }
    }
}

/// Tracks the worst slack over a family of inequalities `lhs <= rhs + tol`.
struct Worst {
    margin: f64,
    index: Option<usize>,
    violated: bool,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            index: None,
            violated: false,
        }
    }

    fn observe(&mut self, k: usize, lhs: f64, rhs: f64, tol: f64) {
        let slack = rhs - lhs;
        // NaN slack counts as a violation
        if !(slack >= -tol) {
            self.violated = true;
        }
        if slack < self.margin || slack.is_nan() {
            self.margin = slack;
            self.index = Some(k);
        }
    }

    fn finish(self, check: &str) -> CheckResult {
        CheckResult {
            check: check.to_string(),
            status: if self.violated {
                CheckStatus::Fail
            } else {
                CheckStatus::Pass
            },
            margin: self.index.map(|_| self.margin),
            index: self.index,
        }
    }
}

fn delta(rec: &IterationRecord, alpha: f64) -> f64 {
    (1.0 - alpha) / (2.0 * rec.gamma) * rec.step_norm * rec.step_norm
}

fn rel_tol(scale: f64) -> f64 {
    REL_TOL * scale.abs().max(1.0)
}

/// Line-search acceptance `phi_k <= Phi_{k-1} - delta_k` on every accepted row.
pub fn verify_acceptance(trace: &[IterationRecord], config: &SolverConfig) -> CheckResult {
    const NAME: &str = "acceptance";
    if trace.is_empty() {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    }
    let mut worst = Worst::new();
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let rhs = prev.merit - delta(cur, config.alpha);
        worst.observe(cur.k, cur.phi, rhs, rel_tol(prev.merit));
    }
    worst.finish(NAME)
}

/// Both sides of the sufficient-decrease chain
/// `phi_k + (1 - p) delta_k <= Phi_k <= Phi_{k-1} - p delta_k`.
pub fn verify_sufficient_decrease(trace: &[IterationRecord], config: &SolverConfig) -> CheckResult {
    const NAME: &str = "sufficient_decrease";
    let Some(p) = config.averaging_weight() else {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    };
    let mut worst = Worst::new();
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let d = delta(cur, config.alpha);
        let tol = rel_tol(prev.merit);
        worst.observe(cur.k, cur.phi + (1.0 - p) * d, cur.merit, tol);
        worst.observe(cur.k, cur.merit, prev.merit - p * d, tol);
    }
    worst.finish(NAME)
}

/// Partial sums `sum_{j<=k} p delta_j <= Phi_0 - Phi_k` for every `k`.
pub fn verify_summability(trace: &[IterationRecord], config: &SolverConfig) -> CheckResult {
    const NAME: &str = "summability";
    let Some(p) = config.averaging_weight() else {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    };
    let Some(first) = trace.first() else {
        return CheckResult::new(NAME, CheckStatus::Pass);
    };
    let mut worst = Worst::new();
    let mut partial = 0.0;
    for rec in &trace[1..] {
        partial += p * delta(rec, config.alpha);
        worst.observe(rec.k, partial, first.merit - rec.merit, ABS_TOL);
    }
    worst.finish(NAME)
}

/// The two `O(1/sqrt(k))` envelopes on the smallest step and smallest
/// fixed-point residual seen so far, using the largest and smallest recorded
/// stepsizes and the final merit in place of the limit value.
pub fn verify_rate_bounds(trace: &[IterationRecord], config: &SolverConfig) -> CheckResult {
    const NAME: &str = "rate_bounds";
    let Some(p) = config.averaging_weight() else {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    };
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    };
    let accepted = &trace[1..];
    let gamma_hi = accepted.iter().map(|r| r.gamma).fold(0.0, f64::max);
    let gamma_lo = accepted
        .iter()
        .map(|r| r.gamma)
        .fold(f64::INFINITY, f64::min);
    let decrease = (first.merit - last.merit).max(0.0);
    let scale = p * (1.0 - config.alpha);
    let step_const = (2.0 * gamma_hi * decrease / scale).sqrt();
    let residual_const = (2.0 * decrease / (gamma_lo * scale)).sqrt();

    let mut worst = Worst::new();
    let mut min_step = f64::INFINITY;
    let mut min_residual = f64::INFINITY;
    for (i, rec) in accepted.iter().enumerate() {
        let count = (i + 1) as f64;
        min_step = min_step.min(rec.step_norm);
        min_residual = min_residual.min(rec.residual);
        worst.observe(rec.k, min_step, step_const / count.sqrt(), ABS_TOL);
        worst.observe(rec.k, min_residual, residual_const / count.sqrt(), ABS_TOL);
    }
    worst.finish(NAME)
}

/// Max flavor: every recorded merit equals the maximum of the objective over
/// the last `M + 1` rows.
pub fn verify_max_window(trace: &[IterationRecord], config: &SolverConfig) -> CheckResult {
    const NAME: &str = "max_window";
    if config.flavor != MeritFlavor::Max {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    }
    let mut worst = Worst::new();
    for (i, rec) in trace.iter().enumerate() {
        let lo = i.saturating_sub(config.memory);
        let expected = trace[lo..=i]
            .iter()
            .map(|r| r.phi)
            .fold(f64::NEG_INFINITY, f64::max);
        let diff = (rec.merit - expected).abs();
        worst.observe(rec.k, diff, 0.0, 0.0);
    }
    worst.finish(NAME)
}

/// Soft check: the smallest fixed-point residual is reached in the last
/// quarter of the trace, or the last residual is already below `epsilon`.
pub fn verify_residual_decrease_trend(
    trace: &[IterationRecord],
    config: &SolverConfig,
) -> CheckResult {
    const NAME: &str = "residual_trend";
    let accepted = trace.get(1..).unwrap_or(&[]);
    if accepted.len() < 8 {
        return CheckResult::new(NAME, CheckStatus::NotApplicable);
    }
    let (argmin, min) = accepted
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, r)| {
            if r.residual < best.1 {
                (i, r.residual)
            } else {
                best
            }
        });
    let last = accepted.last().expect("nonempty");
    let in_tail = argmin >= accepted.len() - accepted.len() / 4;
    let status = if in_tail || last.residual <= config.epsilon {
        CheckStatus::Pass
    } else {
        CheckStatus::Warn
    };
    CheckResult {
        check: NAME.to_string(),
        status,
        margin: Some(min),
        index: Some(accepted[argmin].k),
    }
}

/// Results of every registered check, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

pub fn diagnose(trace: &[IterationRecord], config: &SolverConfig) -> DiagnosticsReport {
    DiagnosticsReport {
        checks: vec![
            verify_acceptance(trace, config),
            verify_sufficient_decrease(trace, config),
            verify_summability(trace, config),
            verify_rate_bounds(trace, config),
            verify_max_window(trace, config),
            verify_residual_decrease_trend(trace, config),
        ],
    }
}
