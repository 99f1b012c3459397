//! Adaptive nonmonotone proximal gradient method for composite problems
//! `minimize f(x) + g(x)` with smooth (possibly nonconvex) `f` and proper,
//! lower semicontinuous, prox-bounded `g`.
//!
//! The solver supports monotone, averaged and max-type merit functions, plain
//! and Barzilai-Borwein stepsizes, and checks a stationarity residual inside
//! the backtracking loop. [`diagnostics`] verifies descent and rate
//! inequalities on recorded traces; [`bench`] runs the dictionary-learning
//! benchmark and builds performance profiles.

// NaN must fail these comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod dictlearn;
pub mod error;
pub mod merit;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod smooth;
pub mod solver;
pub mod stepsize;

pub use error::{Error, Result};
pub use merit::MeritFlavor;
pub use problem::{check_gradient_fd, EvalCounters, NonsmoothTerm, Problem, SmoothTerm};
pub use solver::{solve, solve_observed, IterationRecord, SolveResult, SolverConfig, Status};
pub use stepsize::StepsizeStrategy;
