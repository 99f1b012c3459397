//! Sparse dictionary learning instances: `min 1/2 |Y - D C|_F^2 + lambda |C|_0`
//! subject to unit-norm dictionary atoms.
//!
//! Instances are regenerated from `(dims, seed, lambda)` with a ChaCha8
//! stream; normal variates come from `rand_distr::StandardNormal` (ziggurat).
//! Draw order: planted `D`, then per column of `C` the support indices
//! followed by the values, then the initial `D0` and `C0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Problem, SmoothTerm};
use crate::prox::{normalize_columns, DictLayout, DictLearnRegularizer};

/// Instance sizes: signal length `n`, atoms `l`, signals `m`, planted
/// nonzeros per coefficient column `nnz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictDims {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub nnz: usize,
}

impl DictDims {
    pub fn layout(&self) -> DictLayout {
        DictLayout {
            rows: self.n,
            atoms: self.l,
            signals: self.m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.l == 0 || self.m == 0 {
            return Err(Error::Usage(format!(
                "dimensions must be positive: {self:?}"
            )));
        }
        if self.nnz == 0 || self.nnz > self.l {
            return Err(Error::Usage(format!(
                "nonzeros per column must lie in 1..={}, got {}",
                self.l, self.nnz
            )));
        }
        Ok(())
    }
}

impl Default for DictDims {
    fn default() -> Self {
        DictDims {
            n: 10,
            l: 20,
            m: 30,
            nnz: 3,
        }
    }
}

/// On-disk description of an instance; matrices are regenerated from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub dims: DictDims,
    pub seed: u64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictLearnInstance {
    pub spec: InstanceSpec,
    /// Data matrix `Y = D C`, `n x m` column-major.
    pub data: Vec<f64>,
    /// Planted dictionary with unit-norm columns.
    pub planted_dict: Vec<f64>,
    /// Planted coefficients with exactly `nnz` nonzeros per column.
    pub planted_coef: Vec<f64>,
    /// Raw initial dictionary (columns not normalized).
    pub init_dict: Vec<f64>,
    pub init_coef: Vec<f64>,
}

/// Column-major `a (rows x inner) * b (inner x cols)`.
fn matmul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for s in 0..cols {
        let out_col = &mut out[s * rows..(s + 1) * rows];
        for j in 0..inner {
            let w = b[j + s * inner];
            if w != 0.0 {
                for (o, av) in out_col.iter_mut().zip(&a[j * rows..(j + 1) * rows]) {
                    *o += av * w;
                }
            }
        }
    }
    out
}

pub fn generate_instance(dims: DictDims, lambda: f64, seed: u64) -> Result<DictLearnInstance> {
    dims.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Usage(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals = |len: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..len).map(|_| StandardNormal.sample(rng)).collect()
    };

    let mut planted_dict = normals(dims.n * dims.l, &mut rng);
    normalize_columns(&mut planted_dict, dims.n);

    let mut planted_coef = vec![0.0; dims.l * dims.m];
    for col in planted_coef.chunks_exact_mut(dims.l) {
        let mut support: Vec<usize> =
            rand::seq::index::sample(&mut rng, dims.l, dims.nnz).into_vec();
        support.sort_unstable();
        for j in support {
            // a zero draw would break the nonzero count
            let mut v: f64 = StandardNormal.sample(&mut rng);
            while v == 0.0 {
                v = StandardNormal.sample(&mut rng);
            }
            col[j] = v;
        }
    }

    let data = matmul(&planted_dict, &planted_coef, dims.n, dims.l, dims.m);
    let init_dict = normals(dims.n * dims.l, &mut rng);
    let init_coef = normals(dims.l * dims.m, &mut rng);

    Ok(DictLearnInstance {
        spec: InstanceSpec { dims, seed, lambda },
        data,
        planted_dict,
        planted_coef,
        init_dict,
        init_coef,
    })
}

impl DictLearnInstance {
    pub fn from_spec(spec: &InstanceSpec) -> Result<Self> {
        generate_instance(spec.dims, spec.lambda, spec.seed)
    }

    pub fn layout(&self) -> DictLayout {
        self.spec.dims.layout()
    }

    /// Planted solution packed as `(D, C)`.
    pub fn planted_point(&self) -> Vec<f64> {
        let mut x = self.planted_dict.clone();
        x.extend_from_slice(&self.planted_coef);
        x
    }

    /// Initial point with the dictionary columns projected onto the unit
    /// sphere, so the start lies in the domain of the regularizer.
    pub fn starting_point(&self) -> Vec<f64> {
        let mut x = self.init_dict.clone();
        normalize_columns(&mut x, self.spec.dims.n);
        x.extend_from_slice(&self.init_coef);
        x
    }

    pub fn loss(&self) -> DictLearnLoss {
        DictLearnLoss {
            layout: self.layout(),
            data: self.data.clone(),
        }
    }
}

/// `f(D, C) = 1/2 |D C - Y|_F^2` over the packed variable.
#[derive(Debug, Clone)]
pub struct DictLearnLoss {
    layout: DictLayout,
    data: Vec<f64>,
}

impl DictLearnLoss {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let DictLayout {
            rows,
            atoms,
            signals,
        } = self.layout;
        let (d, c) = self.layout.split(x);
        let mut r = matmul(d, c, rows, atoms, signals);
        r.iter_mut().zip(&self.data).for_each(|(ri, y)| *ri -= y);
        r
    }
}

impl SmoothTerm for DictLearnLoss {
    fn dim(&self) -> usize {
        self.layout.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).iter().map(|r| r * r).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_at(x, &self.residual(x))
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let r = self.residual(x);
        (
            0.5 * r.iter().map(|v| v * v).sum::<f64>(),
            self.gradient_at(x, &r),
        )
    }
}

impl DictLearnLoss {
    fn gradient_at(&self, x: &[f64], r: &[f64]) -> Vec<f64> {
        let DictLayout {
            rows,
            atoms,
            signals,
        } = self.layout;
        let (d, c) = self.layout.split(x);
        let mut grad = vec![0.0; self.layout.len()];
        let (gd, gc) = self.layout.split_mut(&mut grad);
        // grad_D = R C^T, grad_C = D^T R
        for s in 0..signals {
            let r_col = &r[s * rows..(s + 1) * rows];
            for j in 0..atoms {
                let cjs = c[j + s * atoms];
                let d_col = &d[j * rows..(j + 1) * rows];
                let gd_col = &mut gd[j * rows..(j + 1) * rows];
                if cjs != 0.0 {
                    gd_col
                        .iter_mut()
                        .zip(r_col)
                        .for_each(|(g, r)| *g += r * cjs);
                }
                gc[j + s * atoms] = d_col.iter().zip(r_col).map(|(a, b)| a * b).sum();
            }
        }
        grad
    }
}

/// Composite problem for an instance.
pub fn dictlearn_problem(instance: &DictLearnInstance) -> Problem {
    Problem::new(
        Box::new(instance.loss()),
        Box::new(DictLearnRegularizer::new(
            instance.layout(),
            instance.spec.lambda,
        )),
    )
    .expect("loss and regularizer share the layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::check_gradient_fd;
    use rand::Rng;

    fn paper_dims() -> DictDims {
        DictDims::default()
    }

    #[test]
    fn planted_factorization_is_exact() {
        let inst = generate_instance(paper_dims(), 1e-2, 0).unwrap();
        let mut p = dictlearn_problem(&inst);
        let x = inst.planted_point();
        assert!(p.eval_smooth(&x).unwrap() <= 1e-24);
        assert!(p
            .eval_gradient(&x)
            .unwrap()
            .iter()
            .all(|g| g.abs() <= 1e-12));
        for col in inst.planted_dict.chunks_exact(10) {
            assert!((col.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= 1e-12);
        }
        for col in inst.planted_coef.chunks_exact(20) {
            assert_eq!(col.iter().filter(|v| **v != 0.0).count(), 3);
        }
        assert_eq!(p.eval_nonsmooth(&x).unwrap(), 1e-2 * 90.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(paper_dims(), 1e-2, 42).unwrap();
        let b = generate_instance(paper_dims(), 1e-2, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(paper_dims(), 1e-2, 43).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn dense_boundary_and_bad_sparsity() {
        let dims = DictDims {
            n: 4,
            l: 5,
            m: 6,
            nnz: 5,
        };
        let inst = generate_instance(dims, 0.1, 1).unwrap();
        assert!(inst.planted_coef.iter().all(|v| *v != 0.0));
        let bad = DictDims { nnz: 6, ..dims };
        assert!(matches!(
            generate_instance(bad, 0.1, 1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn zero_coefficients_give_half_data_norm() {
        let inst = generate_instance(paper_dims(), 1e-2, 3).unwrap();
        let mut p = dictlearn_problem(&inst);
        let mut x = inst.planted_dict.clone();
        x.extend(std::iter::repeat_n(0.0, inst.layout().coef_len()));
        let half_norm = 0.5 * inst.data.iter().map(|v| v * v).sum::<f64>();
        assert!((p.eval_smooth(&x).unwrap() - half_norm).abs() <= 1e-12 * half_norm.max(1.0));
        assert_eq!(p.eval_nonsmooth(&x).unwrap(), 0.0);
    }

    #[test]
    fn starting_point_is_feasible() {
        let inst = generate_instance(paper_dims(), 1e-2, 9).unwrap();
        let mut p = dictlearn_problem(&inst);
        let raw: Vec<f64> = inst
            .init_dict
            .iter()
            .chain(&inst.init_coef)
            .copied()
            .collect();
        assert_eq!(p.eval_objective(&raw).unwrap(), f64::INFINITY);
        assert!(p
            .eval_objective(&inst.starting_point())
            .unwrap()
            .is_finite());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let inst = generate_instance(
            DictDims {
                n: 4,
                l: 6,
                m: 5,
                nnz: 2,
            },
            1e-2,
            17,
        )
        .unwrap();
        let loss = inst.loss();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let x: Vec<f64> = (0..loss.dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            assert!(check_gradient_fd(&loss, &x, 1e-6).unwrap() < 1e-5);
        }
    }
}
