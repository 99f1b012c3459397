//! Smooth terms shipped with the library.

use crate::error::{Error, Result};
use crate::problem::SmoothTerm;

/// `f(x) = 1/2 sum_i a_i (x_i - c_i)^2`.
#[derive(Debug, Clone)]
pub struct SeparableQuadratic {
    curvature: Vec<f64>,
    center: Vec<f64>,
}

impl SeparableQuadratic {
    pub fn new(curvature: Vec<f64>, center: Vec<f64>) -> Self {
        assert_eq!(
            curvature.len(),
            center.len(),
            "curvature/center length mismatch"
        );
        SeparableQuadratic { curvature, center }
    }
}

impl SmoothTerm for SeparableQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.curvature)
            .zip(&self.center)
            .map(|((xi, a), c)| a * (xi - c) * (xi - c))
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.curvature)
            .zip(&self.center)
            .map(|((xi, a), c)| a * (xi - c))
            .collect()
    }
}

/// `f(x) = 1/2 |A x - b|^2` with a dense row-major `A`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl LeastSquares {
    pub fn new(rows: usize, cols: usize, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if matrix.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: matrix.len(),
            });
        }
        if rhs.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: rhs.len(),
            });
        }
        Ok(LeastSquares {
            rows,
            cols,
            matrix,
            rhs,
        })
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.cols)
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() - b)
            .collect()
    }
}

impl SmoothTerm for LeastSquares {
    fn dim(&self) -> usize {
        self.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).iter().map(|r| r * r).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual(x);
        let mut grad = vec![0.0; self.cols];
        for (row, ri) in self.matrix.chunks_exact(self.cols).zip(&r) {
            for (g, a) in grad.iter_mut().zip(row) {
                *g += a * ri;
            }
        }
        debug_assert_eq!(r.len(), self.rows);
        grad
    }
}
