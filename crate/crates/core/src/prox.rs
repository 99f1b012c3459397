//! Nonsmooth terms with closed-form proximal mappings.
//!
//! Where the prox is set-valued a fixed selection is returned: hard
//! thresholding keeps `x_i` at the tie `x_i^2 = 2 gamma lambda`, and a zero
//! column projects onto the first standard basis vector.

use crate::error::{Error, Result};
use crate::problem::NonsmoothTerm;

/// Columns whose norm is within this distance of one count as feasible for
/// the unit-sphere indicator.
pub const SPHERE_TOL: f64 = 1e-10;

/// Soft thresholding: prox of `lambda |.|_1` with stepsize `gamma`.
pub fn prox_l1(x: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let t = gamma * lambda;
    x.iter()
        .map(|&xi| {
            let mag = xi.abs() - t;
            if mag > 0.0 {
                xi.signum() * mag
            } else {
                0.0
            }
        })
        .collect()
}

/// Hard thresholding: prox of `lambda |.|_0` with stepsize `gamma`.
pub fn prox_l0(x: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let threshold = 2.0 * gamma * lambda;
    x.iter()
        .map(|&xi| if xi * xi >= threshold { xi } else { 0.0 })
        .collect()
}

/// Projects every column of the column-major `rows x cols` matrix `x` onto
/// the unit sphere.
pub fn prox_unit_sphere_columns(x: &[f64], rows: usize) -> Vec<f64> {
    let mut out = x.to_vec();
    normalize_columns(&mut out, rows);
    out
}

pub(crate) fn normalize_columns(x: &mut [f64], rows: usize) {
    for col in x.chunks_exact_mut(rows) {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        } else {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[0] = 1.0;
        }
    }
}

/// Distance from `-v` to `partial (lambda |.|_1)(x)`.
pub fn subdiff_residual_l1(x: &[f64], v: &[f64], lambda: f64) -> f64 {
    x.iter()
        .zip(v)
        .map(|(&xi, &vi)| {
            let d = if xi != 0.0 {
                (-vi - lambda * xi.signum()).abs()
            } else {
                (vi.abs() - lambda).max(0.0)
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Block layout of a dictionary-learning variable `(D, C)`: `D` is
/// `rows x atoms`, `C` is `atoms x signals`, both column-major, `D` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DictLayout {
    pub rows: usize,
    pub atoms: usize,
    pub signals: usize,
}

impl DictLayout {
    pub fn dict_len(&self) -> usize {
        self.rows * self.atoms
    }

    pub fn coef_len(&self) -> usize {
        self.atoms * self.signals
    }

    pub fn len(&self) -> usize {
        self.dict_len() + self.coef_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.dict_len())
    }

    pub fn split_mut<'a>(&self, x: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        x.split_at_mut(self.dict_len())
    }
}

/// Sphere projection on the `D` block, hard thresholding on the `C` block.
pub fn prox_dictlearn(x: &[f64], layout: DictLayout, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    if x.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            got: x.len(),
        });
    }
    let (d, c) = layout.split(x);
    let mut out = prox_unit_sphere_columns(d, layout.rows);
    out.extend(prox_l0(c, gamma, lambda));
    Ok(out)
}

/// `g = 0`.
#[derive(Debug, Clone)]
pub struct ZeroTerm {
    dim: usize,
}

impl ZeroTerm {
    pub fn new(dim: usize) -> Self {
        ZeroTerm { dim }
    }
}

impl NonsmoothTerm for ZeroTerm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn prox(&self, x: &[f64], _gamma: f64) -> Vec<f64> {
        x.to_vec()
    }
    fn subdiff_residual(&self, _x: &[f64], v: &[f64]) -> Option<f64> {
        Some(v.iter().map(|vi| vi * vi).sum::<f64>().sqrt())
    }
}

/// `g = lambda |.|_1`.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
    lambda: f64,
}

impl L1Norm {
    pub fn new(dim: usize, lambda: f64) -> Self {
        L1Norm { dim, lambda }
    }
}

impl NonsmoothTerm for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        prox_l1(x, gamma, self.lambda)
    }
    fn subdiff_residual(&self, x: &[f64], v: &[f64]) -> Option<f64> {
        Some(subdiff_residual_l1(x, v, self.lambda))
    }
}

/// `g = lambda |.|_0` (number of nonzeros).
#[derive(Debug, Clone)]
pub struct L0Norm {
    dim: usize,
    lambda: f64,
}

impl L0Norm {
    pub fn new(dim: usize, lambda: f64) -> Self {
        L0Norm { dim, lambda }
    }
}

fn count_nonzero(x: &[f64]) -> f64 {
    x.iter().filter(|v| **v != 0.0).count() as f64
}

impl NonsmoothTerm for L0Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * count_nonzero(x)
    }
    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        prox_l0(x, gamma, self.lambda)
    }
}

/// Indicator of `{ D : |d_j|_2 = 1 for every column j }`.
#[derive(Debug, Clone)]
pub struct UnitSphereColumns {
    rows: usize,
    cols: usize,
}

impl UnitSphereColumns {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows > 0, "columns must be nonempty");
        UnitSphereColumns { rows, cols }
    }
}

fn columns_on_sphere(x: &[f64], rows: usize) -> bool {
    x.chunks_exact(rows)
        .all(|col| (col.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= SPHERE_TOL)
}

impl NonsmoothTerm for UnitSphereColumns {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }
    fn value(&self, x: &[f64]) -> f64 {
        if columns_on_sphere(x, self.rows) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, x: &[f64], _gamma: f64) -> Vec<f64> {
        prox_unit_sphere_columns(x, self.rows)
    }
}

/// Unit-norm atoms plus `lambda |C|_0`.
#[derive(Debug, Clone)]
pub struct DictLearnRegularizer {
    layout: DictLayout,
    lambda: f64,
}

impl DictLearnRegularizer {
    pub fn new(layout: DictLayout, lambda: f64) -> Self {
        assert!(layout.rows > 0, "dictionary atoms must be nonempty");
        DictLearnRegularizer { layout, lambda }
    }
}

impl NonsmoothTerm for DictLearnRegularizer {
    fn dim(&self) -> usize {
        self.layout.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let (d, c) = self.layout.split(x);
        if !columns_on_sphere(d, self.layout.rows) {
            return f64::INFINITY;
        }
        self.lambda * count_nonzero(c)
    }
    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        // length is checked by Problem before the oracle is reached
        prox_dictlearn(x, self.layout, gamma, self.lambda).expect("layout checked by caller")
    }
}

/// Indicator of a single point.
#[derive(Debug, Clone)]
pub struct PointIndicator {
    point: Vec<f64>,
}

impl PointIndicator {
    pub fn new(point: Vec<f64>) -> Self {
        PointIndicator { point }
    }
}

impl NonsmoothTerm for PointIndicator {
    fn dim(&self) -> usize {
        self.point.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        if x == self.point.as_slice() {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, _x: &[f64], _gamma: f64) -> Vec<f64> {
        self.point.clone()
    }
}
