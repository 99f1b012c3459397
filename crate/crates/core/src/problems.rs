//! Built-in problem catalogue shared by the CLI and the test suites.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictlearn::{dictlearn_problem, generate_instance, DictDims};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::prox::{L0Norm, L1Norm};
use crate::smooth::{LeastSquares, SeparableQuadratic};

fn default_n() -> usize {
    50
}
fn default_lasso_lambda() -> f64 {
    0.1
}
fn default_l0_lambda() -> f64 {
    0.05
}
fn default_dict_lambda() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum BuiltinProblem {
    /// `1/2 (x - 2)^2 + |x|` from `x0 = 0`; minimizer `x* = 1`.
    Lasso1d,
    /// `1/2 |A x - b|^2 + lambda |x|_1` with Gaussian `A` (`n x n`, scaled by
    /// `1/sqrt(n)`) and `b`, from `x0 = 0`.
    Lasso {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_lasso_lambda")]
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Same data as `lasso` with `lambda |x|_0`.
    L0reg {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_l0_lambda")]
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
    Dictlearn {
        #[serde(default)]
        dims: DictDims,
        #[serde(default = "default_dict_lambda")]
        lambda: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl BuiltinProblem {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinProblem::Lasso1d => "lasso1d",
            BuiltinProblem::Lasso { .. } => "lasso",
            BuiltinProblem::L0reg { .. } => "l0reg",
            BuiltinProblem::Dictlearn { .. } => "dictlearn",
        }
    }

    /// One default-parameter instance of every built-in problem.
    pub fn catalogue() -> Vec<BuiltinProblem> {
        vec![
            BuiltinProblem::Lasso1d,
            BuiltinProblem::Lasso {
                n: default_n(),
                lambda: default_lasso_lambda(),
                seed: 0,
            },
            BuiltinProblem::L0reg {
                n: default_n(),
                lambda: default_l0_lambda(),
                seed: 0,
            },
            BuiltinProblem::Dictlearn {
                dims: DictDims::default(),
                lambda: default_dict_lambda(),
                seed: 0,
            },
        ]
    }

    /// Builds the problem together with its starting point.
    pub fn build(&self) -> Result<(Problem, Vec<f64>)> {
        match *self {
            BuiltinProblem::Lasso1d => {
                let p = Problem::new(
                    Box::new(SeparableQuadratic::new(vec![1.0], vec![2.0])),
                    Box::new(L1Norm::new(1, 1.0)),
                )?;
                Ok((p, vec![0.0]))
            }
            BuiltinProblem::Lasso { n, lambda, seed } => {
                let ls = gaussian_least_squares(n, seed)?;
                Ok((
                    Problem::new(Box::new(ls), Box::new(L1Norm::new(n, lambda)))?,
                    vec![0.0; n],
                ))
            }
            BuiltinProblem::L0reg { n, lambda, seed } => {
                let ls = gaussian_least_squares(n, seed)?;
                Ok((
                    Problem::new(Box::new(ls), Box::new(L0Norm::new(n, lambda)))?,
                    vec![0.0; n],
                ))
            }
            BuiltinProblem::Dictlearn { dims, lambda, seed } => {
                let inst = generate_instance(dims, lambda, seed)?;
                Ok((dictlearn_problem(&inst), inst.starting_point()))
            }
        }
    }
}

fn gaussian_least_squares(n: usize, seed: u64) -> Result<LeastSquares> {
    if n == 0 {
        return Err(Error::Usage("problem dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let matrix: Vec<f64> = (0..n * n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            scale * v
        })
        .collect();
    let rhs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    LeastSquares::new(n, n, matrix, rhs)
}
