//! Composite problem abstraction `phi = f + g` with evaluation counters.
//!
//! Points are flat `[f64]` slices. Matrix-shaped variables are flattened in
//! column-major order (see [`crate::dictlearn::Layout`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth part `f` of the composite objective: finite everywhere, with gradient.
pub trait SmoothTerm: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `(f(x), grad f(x))` in one pass; override when the two share work.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// Nonsmooth part `g`: extended-real valued (`f64::INFINITY` off its domain)
/// with a proximal oracle.
pub trait NonsmoothTerm: Send + Sync {
    fn dim(&self) -> usize;

    /// Value of `g`, `f64::INFINITY` outside `dom g`.
    fn value(&self, x: &[f64]) -> f64;

    /// One selection from `argmin_z g(z) + |z - x|^2 / (2 gamma)`.
    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64>;

    /// Distance from `-v` to the subdifferential of `g` at `x`, when the term
    /// knows how to compute it.
    fn subdiff_residual(&self, _x: &[f64], _v: &[f64]) -> Option<f64> {
        None
    }
}

/// Cumulative oracle call tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub f_evals: u64,
    pub grad_evals: u64,
    pub g_evals: u64,
    pub prox_evals: u64,
}

/// `minimize f(x) + g(x)`.
pub struct Problem {
    smooth: Box<dyn SmoothTerm>,
    nonsmooth: Box<dyn NonsmoothTerm>,
    counters: EvalCounters,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.dim())
            .field("counters", &self.counters)
            .finish()
    }
}

impl Problem {
    pub fn new(smooth: Box<dyn SmoothTerm>, nonsmooth: Box<dyn NonsmoothTerm>) -> Result<Self> {
        if smooth.dim() != nonsmooth.dim() {
            return Err(Error::DimensionMismatch {
                expected: smooth.dim(),
                got: nonsmooth.dim(),
            });
        }
        Ok(Problem {
            smooth,
            nonsmooth,
            counters: EvalCounters::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn counters(&self) -> EvalCounters {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = EvalCounters::default();
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.smooth.as_ref()
    }

    pub fn nonsmooth(&self) -> &dyn NonsmoothTerm {
        self.nonsmooth.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval_smooth(&mut self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.counters.f_evals += 1;
        let v = self.smooth.value(x);
        if !v.is_finite() {
            return Err(Error::OracleFault {
                oracle: "f",
                detail: format!("non-finite value {v}"),
            });
        }
        Ok(v)
    }

    pub fn eval_nonsmooth(&mut self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.counters.g_evals += 1;
        let v = self.nonsmooth.value(x);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::OracleFault {
                oracle: "g",
                detail: format!("invalid value {v}"),
            });
        }
        Ok(v)
    }

    /// `phi(x) = f(x) + g(x)`; `+inf` exactly when `g(x) = +inf`.
    pub fn eval_objective(&mut self, x: &[f64]) -> Result<f64> {
        let fx = self.eval_smooth(x)?;
        let gx = self.eval_nonsmooth(x)?;
        if gx == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok(fx + gx)
    }

    pub fn eval_gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.counters.grad_evals += 1;
        let grad = self.smooth.gradient(x);
        self.check_gradient(grad)
    }

    /// Fused `f` and `grad f`; counts one call of each oracle.
    pub fn eval_smooth_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x)?;
        self.counters.f_evals += 1;
        self.counters.grad_evals += 1;
        let (v, grad) = self.smooth.value_and_gradient(x);
        if !v.is_finite() {
            return Err(Error::OracleFault {
                oracle: "f",
                detail: format!("non-finite value {v}"),
            });
        }
        Ok((v, self.check_gradient(grad)?))
    }

    fn check_gradient(&self, grad: Vec<f64>) -> Result<Vec<f64>> {
        if grad.len() != self.dim() {
            return Err(Error::OracleFault {
                oracle: "grad f",
                detail: format!(
                    "gradient has length {}, expected {}",
                    grad.len(),
                    self.dim()
                ),
            });
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFault {
                oracle: "grad f",
                detail: "non-finite gradient entry".into(),
            });
        }
        Ok(grad)
    }

    pub fn prox(&mut self, x: &[f64], gamma: f64) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.counters.prox_evals += 1;
        let z = self.nonsmooth.prox(x, gamma);
        if z.len() != self.dim() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFault {
                oracle: "prox g",
                detail: "prox output has wrong length or non-finite entries".into(),
            });
        }
        Ok(z)
    }
}

/// Largest relative discrepancy between `smooth.gradient(x)` and central
/// differences with step `h`, scaled by `max(1, |grad_i|)`.
pub fn check_gradient_fd(smooth: &dyn SmoothTerm, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Usage(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    if x.len() != smooth.dim() {
        return Err(Error::DimensionMismatch {
            expected: smooth.dim(),
            got: x.len(),
        });
    }
    let grad = smooth.gradient(x);
    let mut probe = x.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = smooth.value(&probe);
        probe[i] = x[i] - h;
        let down = smooth.value(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * h);
        if !fd.is_finite() || !grad[i].is_finite() {
            return Err(Error::OracleFault {
                oracle: "f",
                detail: format!("non-finite value near coordinate {i}"),
            });
        }
        let err = (fd - grad[i]).abs() / grad[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{L1Norm, UnitSphereColumns, ZeroTerm};
    use crate::smooth::{LeastSquares, SeparableQuadratic};

    fn half_sq_norm(n: usize) -> Box<dyn SmoothTerm> {
        Box::new(SeparableQuadratic::new(vec![1.0; n], vec![0.0; n]))
    }

    struct Sine;
    impl SmoothTerm for Sine {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].sin()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0].cos()]
        }
    }

    struct NanSmooth;
    impl SmoothTerm for NanSmooth {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _x: &[f64]) -> f64 {
            f64::NAN
        }
        fn gradient(&self, _x: &[f64]) -> Vec<f64> {
            vec![f64::INFINITY]
        }
    }

    #[test]
    fn objective_examples() {
        let mut p = Problem::new(half_sq_norm(2), Box::new(ZeroTerm::new(2))).unwrap();
        assert_eq!(p.eval_objective(&[3.0, 4.0]).unwrap(), 12.5);

        let mut p = Problem::new(
            Box::new(SeparableQuadratic::new(vec![0.0; 2], vec![0.0; 2])),
            Box::new(UnitSphereColumns::new(2, 1)),
        )
        .unwrap();
        assert_eq!(p.eval_objective(&[0.5, 0.0]).unwrap(), f64::INFINITY);

        let mut p = Problem::new(
            Box::new(SeparableQuadratic::new(vec![1.0], vec![2.0])),
            Box::new(L1Norm::new(1, 1.0)),
        )
        .unwrap();
        assert_eq!(p.eval_objective(&[1.0]).unwrap(), 1.5);
        let c = p.counters();
        assert_eq!(
            (c.f_evals, c.g_evals, c.grad_evals, c.prox_evals),
            (1, 1, 0, 0)
        );
    }

    #[test]
    fn objective_is_exact_sum() {
        let mut p = Problem::new(
            Box::new(SeparableQuadratic::new(vec![0.3, 1.7], vec![-0.1, 2.2])),
            Box::new(L1Norm::new(2, 0.37)),
        )
        .unwrap();
        let x = [0.123, -4.56];
        let reference = p.smooth().value(&x) + p.nonsmooth().value(&x);
        assert_eq!(p.eval_objective(&x).unwrap().to_bits(), reference.to_bits());
    }

    #[test]
    fn gradient_examples() {
        let mut p = Problem::new(half_sq_norm(2), Box::new(ZeroTerm::new(2))).unwrap();
        assert_eq!(p.eval_gradient(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);

        let ls = LeastSquares::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let mut p = Problem::new(Box::new(ls), Box::new(ZeroTerm::new(2))).unwrap();
        assert_eq!(p.eval_gradient(&[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);

        let mut p = Problem::new(
            Box::new(SeparableQuadratic::new(vec![1.0], vec![2.0])),
            Box::new(ZeroTerm::new(1)),
        )
        .unwrap();
        assert_eq!(p.eval_gradient(&[0.0]).unwrap(), vec![-2.0]);
        assert_eq!(p.counters().grad_evals, 1);
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let mut p = Problem::new(half_sq_norm(2), Box::new(ZeroTerm::new(2))).unwrap();
        assert!(matches!(
            p.eval_objective(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(Problem::new(half_sq_norm(2), Box::new(ZeroTerm::new(3))).is_err());
    }

    #[test]
    fn nan_oracles_are_faults() {
        let mut p = Problem::new(Box::new(NanSmooth), Box::new(ZeroTerm::new(1))).unwrap();
        assert!(matches!(
            p.eval_objective(&[0.0]),
            Err(Error::OracleFault { .. })
        ));
        assert!(matches!(
            p.eval_gradient(&[0.0]),
            Err(Error::OracleFault { .. })
        ));
    }

    #[test]
    fn fd_checker_examples() {
        let q = SeparableQuadratic::new(vec![1.0, 1.0], vec![0.0, 0.0]);
        assert!(check_gradient_fd(&q, &[1.0, 2.0], 1e-6).unwrap() < 1e-6);
        assert!(check_gradient_fd(&Sine, &[0.0], 1e-6).unwrap() < 1e-8);
        assert!(check_gradient_fd(&Sine, &[0.0], 0.0).is_err());
    }
}
