//! Dictionary-learning benchmark suite and performance profiles.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictlearn::{dictlearn_problem, DictDims, DictLearnInstance, InstanceSpec};
use crate::error::{Error, Result};
use crate::merit::MeritFlavor;
use crate::solver::{solve, SolverConfig, Status};
use crate::stepsize::StepsizeStrategy;

/// Outer-iteration cap for benchmark runs. Plain stepsizes never grow, so
/// their runs can need well over the solver's default cap.
pub const BENCH_MAX_ITERS: usize = 1_000_000;

/// A stepsize rule paired with a merit flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub stepsize: StepsizeStrategy,
    pub flavor: MeritFlavor,
}

impl Variant {
    pub const fn new(stepsize: StepsizeStrategy, flavor: MeritFlavor) -> Self {
        Variant { stepsize, flavor }
    }

    /// All six combinations, plain before spectral.
    pub fn all() -> Vec<Variant> {
        let mut out = Vec::with_capacity(6);
        for stepsize in [StepsizeStrategy::Plain, StepsizeStrategy::Spectral] {
            for flavor in [
                MeritFlavor::Monotone,
                MeritFlavor::Average,
                MeritFlavor::Max,
            ] {
                out.push(Variant { stepsize, flavor });
            }
        }
        out
    }

    /// Benchmark settings: `alpha = 0.999`, `beta = 0.5`, stepsizes in
    /// `[1e-12, 1e12]` starting from 1, `p = 0.2`, `M = 5`.
    pub fn config(&self, epsilon: f64) -> SolverConfig {
        SolverConfig {
            epsilon,
            max_iters: BENCH_MAX_ITERS,
            ..SolverConfig::variant(self.stepsize, self.flavor)
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.stepsize.name(), self.flavor.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::all()
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown variant '{s}'")))
    }
}

/// `count` instances with consecutive seeds starting at `base_seed`.
pub fn suite_instances(
    count: usize,
    base_seed: u64,
    dims: DictDims,
    lambda: f64,
) -> Vec<InstanceSpec> {
    (0..count as u64)
        .map(|i| InstanceSpec {
            dims,
            seed: base_seed + i,
            lambda,
        })
        .collect()
}

/// Provenance written next to a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetadata {
    pub instances: Vec<InstanceSpec>,
    pub variants: Vec<String>,
    pub epsilon: f64,
    pub max_iters: usize,
    pub generator: String,
    pub normal_variates: String,
    /// How the random initial dictionary was made feasible.
    pub starting_point: String,
}

impl SuiteMetadata {
    pub fn new(instances: &[InstanceSpec], variants: &[Variant], epsilon: f64) -> Self {
        SuiteMetadata {
            instances: instances.to_vec(),
            variants: variants.iter().map(Variant::name).collect(),
            epsilon,
            max_iters: BENCH_MAX_ITERS,
            generator: "ChaCha8 (rand_chacha), seed_from_u64".into(),
            normal_variates: "rand_distr::StandardNormal (ziggurat)".into(),
            starting_point: "initial dictionary columns projected onto the unit sphere".into(),
        }
    }
}

/// One `(instance, variant)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_seed: u64,
    pub variant: String,
    /// Solver status name, or `error` when the run itself failed.
    pub status: String,
    pub iters: usize,
    pub prox_evals: u64,
    pub grad_evals: u64,
    pub phi_final: f64,
    pub residual_final: f64,
}

impl ResultRow {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged.name()
    }
}

fn run_one(spec: &InstanceSpec, variant: Variant, epsilon: f64) -> ResultRow {
    let failed = || ResultRow {
        instance_seed: spec.seed,
        variant: variant.name(),
        status: "error".into(),
        iters: 0,
        prox_evals: 0,
        grad_evals: 0,
        phi_final: f64::NAN,
        residual_final: f64::NAN,
    };
    let Ok(instance) = DictLearnInstance::from_spec(spec) else {
        return failed();
    };
    let mut problem = dictlearn_problem(&instance);
    match solve(
        &mut problem,
        &instance.starting_point(),
        &variant.config(epsilon),
    ) {
        Ok(res) => ResultRow {
            instance_seed: spec.seed,
            variant: variant.name(),
            status: res.status.name().into(),
            iters: res.iterations,
            prox_evals: res.counters.prox_evals,
            grad_evals: res.counters.grad_evals,
            phi_final: res.phi_final,
            residual_final: res.final_residual,
        },
        Err(_) => failed(),
    }
}

/// Runs every variant on every instance, `parallel` runs at a time
/// (0 picks the number of cores). Rows are ordered instance-major.
pub fn run_suite(
    instances: &[InstanceSpec],
    variants: &[Variant],
    epsilon: f64,
    parallel: usize,
) -> Result<Vec<ResultRow>> {
    let jobs: Vec<(&InstanceSpec, Variant)> = instances
        .iter()
        .flat_map(|spec| variants.iter().map(move |v| (spec, *v)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|(spec, v)| run_one(spec, *v, epsilon))
            .collect()
    }))
}

pub fn write_results_csv<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record([
            "instance_seed",
            "variant",
            "status",
            "iters",
            "prox_evals",
            "grad_evals",
            "phi_final",
            "residual_final",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMetric {
    /// Proximal evaluations spent until termination.
    ProxEvals,
    /// Final objective value.
    Objective,
}

impl ProfileMetric {
    fn value(&self, row: &ResultRow) -> f64 {
        match self {
            ProfileMetric::ProxEvals => row.prox_evals as f64,
            ProfileMetric::Objective => row.phi_final,
        }
    }
}

/// Fraction of a variant's instances solved within each budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub variant: String,
    pub budgets: Vec<f64>,
    pub fractions: Vec<f64>,
}

/// Builds one curve per variant (in order of first appearance). An instance
/// counts as solved at budget `t` when its run converged and its metric is at
/// most `t`. Budgets sweep the union of observed values over all variants;
/// the evaluation-count profile starts from a zero budget.
pub fn performance_profile(rows: &[ResultRow], metric: ProfileMetric) -> Result<Vec<ProfileCurve>> {
    if rows.is_empty() {
        return Err(Error::Usage("cannot profile an empty result table".into()));
    }
    let mut variants: Vec<&str> = Vec::new();
    for row in rows {
        if !variants.contains(&row.variant.as_str()) {
            variants.push(&row.variant);
        }
    }
    let mut budgets: Vec<f64> = rows
        .iter()
        .filter(|r| r.converged())
        .map(|r| metric.value(r))
        .filter(|v| v.is_finite())
        .collect();
    if metric == ProfileMetric::ProxEvals {
        budgets.push(0.0);
    }
    budgets.sort_by(|a, b| a.total_cmp(b));
    budgets.dedup();

    Ok(variants
        .into_iter()
        .map(|name| {
            let own: Vec<&ResultRow> = rows.iter().filter(|r| r.variant == name).collect();
            let mut solved: Vec<f64> = own
                .iter()
                .filter(|r| r.converged())
                .map(|r| metric.value(r))
                .filter(|v| v.is_finite())
                .collect();
            solved.sort_by(|a, b| a.total_cmp(b));
            let total = own.len() as f64;
            let fractions = budgets
                .iter()
                .map(|b| solved.partition_point(|v| v <= b) as f64 / total)
                .collect();
            ProfileCurve {
                variant: name.to_string(),
                budgets: budgets.clone(),
                fractions,
            }
        })
        .collect())
}

/// Writes `<dir>/<variant>.dat` with whitespace-separated `budget fraction`
/// lines.
pub fn write_profile_files(dir: &Path, curves: &[ProfileCurve]) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(curves.len());
    for curve in curves {
        let path = dir.join(format!("{}.dat", curve.variant));
        let mut out = String::new();
        for (b, f) in curve.budgets.iter().zip(&curve.fractions) {
            out.push_str(&format!("{b} {f}\n"));
        }
        std::fs::write(&path, out)?;
        written.push(path);
    }
    Ok(written)
}

/// Median of the evaluation counts of a variant's converged runs.
pub fn median_prox_evals(rows: &[ResultRow], variant: &str) -> Option<f64> {
    let mut v: Vec<u64> = rows
        .iter()
        .filter(|r| r.variant == variant && r.converged())
        .map(|r| r.prox_evals)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) as f64 / 2.0
    } else {
        v[mid] as f64
    })
}
