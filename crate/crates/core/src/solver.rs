//! Nonmonotone proximal gradient driver.
//!
//! Each outer iteration proposes a stepsize, then backtracks: a proximal
//! gradient trial point is formed, the stationarity residual is tested first
//! (so termination can happen inside the backtracking loop), and only then
//! is the trial checked against the merit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merit::{accept, MeritFlavor, MeritState};
use crate::problem::{EvalCounters, Problem};
use crate::stepsize::{StepsizeRule, StepsizeStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Stepsize proposed at the first iteration (before clamping).
    pub gamma_init: f64,
    /// Sufficient-decrease parameter in `(0, 1)`.
    pub alpha: f64,
    /// Backtracking factor in `(0, 1)`.
    pub beta: f64,
    /// Averaging weight for the average flavor, in `(0, 1]`.
    pub p: f64,
    /// Window length `M` of the max flavor.
    pub memory: usize,
    pub flavor: MeritFlavor,
    pub stepsize: StepsizeStrategy,
    pub epsilon: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma_min: 1e-12,
            gamma_max: 1e12,
            gamma_init: 1.0,
            alpha: 0.999,
            beta: 0.5,
            p: 0.2,
            memory: 5,
            flavor: MeritFlavor::Average,
            stepsize: StepsizeStrategy::Spectral,
            epsilon: 1e-6,
            max_iters: 100_000,
            max_backtracks: 200,
        }
    }
}

impl SolverConfig {
    /// Defaults with the given stepsize rule and merit flavor.
    pub fn variant(stepsize: StepsizeStrategy, flavor: MeritFlavor) -> Self {
        SolverConfig {
            stepsize,
            flavor,
            ..SolverConfig::default()
        }
    }

    /// Averaging weight used by the merit, `None` for the max flavor.
    pub fn averaging_weight(&self) -> Option<f64> {
        self.flavor.averaging_weight(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma_min > 0.0 && self.gamma_min <= self.gamma_max && self.gamma_max.is_finite())
        {
            return fail(format!(
                "need 0 < gamma_min <= gamma_max < inf, got [{}, {}]",
                self.gamma_min, self.gamma_max
            ));
        }
        if !(self.gamma_init > 0.0 && self.gamma_init.is_finite()) {
            return fail(format!(
                "gamma_init must be positive and finite, got {}",
                self.gamma_init
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return fail(format!("p must lie in (0, 1], got {}", self.p));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            ));
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// One row of the solver trace. Row `k = 0` describes the starting point;
/// every later row is an accepted iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub gamma: f64,
    pub phi: f64,
    #[serde(rename = "Phi")]
    pub merit: f64,
    /// Fixed-point residual `|x^k - x^{k-1}| / gamma_k`.
    pub residual: f64,
    pub backtracks: usize,
    pub step_norm: f64,
    pub prox_evals: u64,
    pub grad_evals: u64,
    pub f_evals: u64,
    pub g_evals: u64,
}

pub type Trace = Vec<IterationRecord>;

pub fn write_trace_csv<W: Write>(writer: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in trace {
        w.serialize(rec)?;
    }
    if trace.is_empty() {
        w.write_record([
            "k",
            "gamma",
            "phi",
            "Phi",
            "residual",
            "backtracks",
            "step_norm",
            "prox_evals",
            "grad_evals",
            "f_evals",
            "g_evals",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Trace> {
    let mut r = csv::Reader::from_reader(reader);
    let trace = r
        .deserialize()
        .collect::<std::result::Result<Vec<IterationRecord>, _>>()?;
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    MaxBacktracks,
    InfeasibleStart,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::MaxBacktracks => "max_backtracks",
            Status::InfeasibleStart => "infeasible_start",
        }
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Status::Converged),
            "max_iters" => Ok(Status::MaxIters),
            "max_backtracks" => Ok(Status::MaxBacktracks),
            "infeasible_start" => Ok(Status::InfeasibleStart),
            other => Err(Error::Usage(format!("unknown status '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: Vec<f64>,
    pub status: Status,
    /// Termination residual of the last trial point that was tested.
    pub final_residual: f64,
    /// Stepsize of the last trial point.
    pub final_gamma: f64,
    /// Iterate the last trial point was computed from.
    pub x_anchor: Vec<f64>,
    pub phi_final: f64,
    /// Outer iterations started, including a terminating one.
    pub iterations: usize,
    pub counters: EvalCounters,
    pub trace: Trace,
}

/// Machine-readable summary of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub status: Status,
    pub phi_final: Option<f64>,
    pub final_residual: Option<f64>,
    pub iterations: usize,
    pub counters: EvalCounters,
    pub x_final: Vec<f64>,
}

impl SolveResult {
    pub fn summary(&self) -> ResultSummary {
        let finite = |v: f64| v.is_finite().then_some(v);
        ResultSummary {
            status: self.status,
            phi_final: finite(self.phi_final),
            final_residual: finite(self.final_residual),
            iterations: self.iterations,
            counters: self.counters,
            x_final: self.x_final.clone(),
        }
    }
}

/// `|(x_new - x_prev) / gamma - grad_new + grad_prev|`.
pub fn termination_residual(
    x_prev: &[f64],
    x_new: &[f64],
    gamma: f64,
    grad_prev: &[f64],
    grad_new: &[f64],
) -> f64 {
    x_prev
        .iter()
        .zip(x_new)
        .zip(grad_prev.iter().zip(grad_new))
        .map(|((xp, xn), (gp, gn))| {
            let r = (xn - xp) / gamma - gn + gp;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted {
        x: Vec<f64>,
        grad: Vec<f64>,
        phi: f64,
        gamma: f64,
        backtracks: usize,
        step_sq: f64,
        residual: f64,
    },
    Terminated {
        x: Vec<f64>,
        gamma: f64,
        residual: f64,
        backtracks: usize,
    },
    BacktrackLimit {
        gamma: f64,
        residual: f64,
        backtracks: usize,
    },
}

/// Runs one outer iteration starting from the accepted iterate `x_prev`.
/// The merit `merit_prev` stays fixed while the stepsize is reduced.
pub fn step(
    problem: &mut Problem,
    x_prev: &[f64],
    grad_prev: &[f64],
    merit_prev: f64,
    gamma_trial: f64,
    config: &SolverConfig,
) -> Result<StepOutcome> {
    let mut gamma = gamma_trial;
    let mut backtracks = 0;
    let mut forward = vec![0.0; x_prev.len()];
    loop {
        for ((f, x), g) in forward.iter_mut().zip(x_prev).zip(grad_prev) {
            *f = x - gamma * g;
        }
        let x = problem.prox(&forward, gamma)?;
        let (fx, grad) = problem.eval_smooth_and_gradient(&x)?;
        let residual = termination_residual(x_prev, &x, gamma, grad_prev, &grad);
        if residual <= config.epsilon {
            return Ok(StepOutcome::Terminated {
                x,
                gamma,
                residual,
                backtracks,
            });
        }
        let gx = problem.eval_nonsmooth(&x)?;
        let phi = if gx == f64::INFINITY { gx } else { fx + gx };
        let step_sq: f64 = x.iter().zip(x_prev).map(|(a, b)| (a - b) * (a - b)).sum();
        if accept(phi, merit_prev, gamma, config.alpha, step_sq) {
            return Ok(StepOutcome::Accepted {
                x,
                grad,
                phi,
                gamma,
                backtracks,
                step_sq,
                residual,
            });
        }
        if backtracks >= config.max_backtracks {
            return Ok(StepOutcome::BacktrackLimit {
                gamma,
                residual,
                backtracks,
            });
        }
        gamma *= config.beta;
        backtracks += 1;
    }
}

fn record(
    k: usize,
    gamma: f64,
    phi: f64,
    merit: f64,
    backtracks: usize,
    step_norm: f64,
    c: EvalCounters,
) -> IterationRecord {
    IterationRecord {
        k,
        gamma,
        phi,
        merit,
        residual: step_norm / gamma,
        backtracks,
        step_norm,
        prox_evals: c.prox_evals,
        grad_evals: c.grad_evals,
        f_evals: c.f_evals,
        g_evals: c.g_evals,
    }
}

/// Minimizes `problem` from `x0`.
///
/// An infeasible start (`phi(x0) = +inf`) is reported through
/// [`Status::InfeasibleStart`] rather than an error.
pub fn solve(problem: &mut Problem, x0: &[f64], config: &SolverConfig) -> Result<SolveResult> {
    solve_observed(problem, x0, config, |_, _| {})
}

/// [`solve`], calling `observer` with every trace row and the iterate it
/// describes (the starting point first, then each accepted iterate).
pub fn solve_observed(
    problem: &mut Problem,
    x0: &[f64],
    config: &SolverConfig,
    mut observer: impl FnMut(&IterationRecord, &[f64]),
) -> Result<SolveResult> {
    config.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("starting point has non-finite entries".into()));
    }

    let phi0 = problem.eval_objective(x0)?;
    let mut merit = match MeritState::init(config.flavor, config.p, config.memory, phi0) {
        Ok(m) => m,
        Err(Error::InfeasibleStart) => {
            return Ok(SolveResult {
                x_final: x0.to_vec(),
                status: Status::InfeasibleStart,
                final_residual: f64::NAN,
                final_gamma: f64::NAN,
                x_anchor: x0.to_vec(),
                phi_final: f64::INFINITY,
                iterations: 0,
                counters: problem.counters(),
                trace: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut grad = problem.eval_gradient(x0)?;
    let mut rule = StepsizeRule::new(
        config.stepsize,
        config.gamma_init,
        config.gamma_min,
        config.gamma_max,
    );

    let mut x = x0.to_vec();
    let mut anchor = x0.to_vec();
    let mut phi = phi0;
    let mut trace = vec![record(
        0,
        rule.propose(),
        phi0,
        merit.value(),
        0,
        0.0,
        problem.counters(),
    )];
    observer(&trace[0], x0);
    let mut last_residual = f64::NAN;
    let mut last_gamma = f64::NAN;

    for k in 1..=config.max_iters {
        let gamma_trial = rule.propose();
        match step(problem, &x, &grad, merit.value(), gamma_trial, config)? {
            StepOutcome::Terminated {
                x: x_new,
                gamma,
                residual,
                ..
            } => {
                let phi_final = problem.eval_objective(&x_new)?;
                return Ok(SolveResult {
                    x_final: x_new,
                    status: Status::Converged,
                    final_residual: residual,
                    final_gamma: gamma,
                    x_anchor: x,
                    phi_final,
                    iterations: k,
                    counters: problem.counters(),
                    trace,
                });
            }
            StepOutcome::Accepted {
                x: x_new,
                grad: grad_new,
                phi: phi_new,
                gamma,
                backtracks,
                step_sq,
                residual,
            } => {
                merit.update(phi_new);
                let dx: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
                rule.record_accepted(gamma, &dx, &dg);
                let row = record(
                    k,
                    gamma,
                    phi_new,
                    merit.value(),
                    backtracks,
                    step_sq.sqrt(),
                    problem.counters(),
                );
                observer(&row, &x_new);
                trace.push(row);
                anchor = std::mem::replace(&mut x, x_new);
                grad = grad_new;
                phi = phi_new;
                last_residual = residual;
                last_gamma = gamma;
            }
            StepOutcome::BacktrackLimit {
                gamma, residual, ..
            } => {
                return Ok(SolveResult {
                    x_anchor: x.clone(),
                    x_final: x,
                    status: Status::MaxBacktracks,
                    final_residual: residual,
                    final_gamma: gamma,
                    phi_final: phi,
                    iterations: k,
                    counters: problem.counters(),
                    trace,
                });
            }
        }
    }

    Ok(SolveResult {
        x_anchor: anchor,
        x_final: x,
        status: Status::MaxIters,
        final_residual: last_residual,
        final_gamma: last_gamma,
        phi_final: phi,
        iterations: config.max_iters,
        counters: problem.counters(),
        trace,
    })
}
