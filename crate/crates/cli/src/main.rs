//! `nmpg`: solve, diagnose, benchmark and profile from the command line.

// NaN must fail these comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod spec;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nmpg::bench::{
    median_prox_evals, performance_profile, read_results_csv, run_suite, suite_instances,
    write_profile_files, write_results_csv, ProfileMetric, SuiteMetadata, Variant,
};
use nmpg::diagnostics::diagnose;
use nmpg::dictlearn::{DictDims, InstanceSpec};
use nmpg::problems::BuiltinProblem;
use nmpg::solver::{read_trace_csv, write_trace_csv};
use nmpg::{solve, MeritFlavor, Status, StepsizeStrategy};

use crate::spec::RunSpec;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "nmpg", version, about = "Nonmonotone proximal gradient solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a built-in problem described by a JSON run spec.
    Solve(SolveArgs),
    /// Check a trace against the descent and rate inequalities.
    Diagnose(DiagnoseArgs),
    /// Run the dictionary-learning suite over all six solver variants.
    Bench(BenchArgs),
    /// Turn a bench result table into performance-profile data files.
    Profile(ProfileArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Monotone,
    Average,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepsizeArg {
    Plain,
    Spectral,
}

/// Solver settings that override the spec file.
#[derive(Args, Default)]
struct ConfigOverrides {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    max_backtracks: Option<usize>,
    #[arg(long, value_enum)]
    flavor: Option<FlavorArg>,
    #[arg(long, value_enum)]
    stepsize: Option<StepsizeArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    /// Replaces the seed of seeded built-in problems.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigOverrides {
    fn apply(&self, spec: &mut RunSpec) {
        let c = &mut spec.solver;
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        set!(
            epsilon,
            max_iters,
            max_backtracks,
            alpha,
            beta,
            p,
            memory,
            gamma_min,
            gamma_max
        );
        if let Some(f) = self.flavor {
            c.flavor = match f {
                FlavorArg::Monotone => MeritFlavor::Monotone,
                FlavorArg::Average => MeritFlavor::Average,
                FlavorArg::Max => MeritFlavor::Max,
            };
        }
        if let Some(s) = self.stepsize {
            c.stepsize = match s {
                StepsizeArg::Plain => StepsizeStrategy::Plain,
                StepsizeArg::Spectral => StepsizeStrategy::Spectral,
            };
        }
        if let Some(new_seed) = self.seed {
            match &mut spec.problem {
                BuiltinProblem::Lasso { seed, .. }
                | BuiltinProblem::L0reg { seed, .. }
                | BuiltinProblem::Dictlearn { seed, .. } => *seed = new_seed,
                BuiltinProblem::Lasso1d => {}
            }
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// Result JSON destination (stdout when omitted).
    #[arg(long)]
    out_result: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Run spec whose solver settings produced the trace.
    #[arg(long)]
    spec: PathBuf,
    /// Report JSON destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concurrent runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    /// Result table; provenance goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    /// JSON array of `{dims, seed, lambda}` instances, replacing the
    /// generated suite.
    #[arg(long)]
    instance_file: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    l: usize,
    #[arg(long, default_value_t = 30)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    nnz: usize,
    #[arg(long, default_value_t = 1e-2)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Prox,
    Objective,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value = "prox")]
    metric: MetricArg,
    #[arg(long)]
    out_dir: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn write_json<T: serde::Serialize>(dest: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match dest {
        Some(path) => std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let mut spec = RunSpec::load(&args.spec)?;
    args.overrides.apply(&mut spec);
    spec.solver.validate()?;
    let (mut problem, x0) = spec.problem.build()?;
    let result = solve(&mut problem, &x0, &spec.solver)?;
    if let Some(path) = &args.out_trace {
        write_trace_csv(create(path)?, &result.trace)?;
    }
    write_json(args.out_result.as_deref(), &result.summary())?;
    eprintln!(
        "{}: {} after {} iterations, phi = {}, residual = {}",
        spec.problem.name(),
        result.status.name(),
        result.iterations,
        result.phi_final,
        result.final_residual
    );
    Ok(if result.status == Status::Converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<u8> {
    let mut spec = RunSpec::load(&args.spec)?;
    args.overrides.apply(&mut spec);
    spec.solver.validate()?;
    let trace = read_trace_csv(open(&args.trace)?)
        .with_context(|| format!("malformed trace {}", args.trace.display()))?;
    let report = diagnose(&trace, &spec.solver);
    write_json(args.out.as_deref(), &report)?;
    for failed in report.failures() {
        eprintln!(
            "check {} failed at k = {:?} (margin {:?})",
            failed.check, failed.index, failed.margin
        );
    }
    Ok(if report.passed() {
        0
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    let dims = DictDims {
        n: args.n,
        l: args.l,
        m: args.m,
        nnz: args.nnz,
    };
    if !(args.epsilon > 0.0) {
        bail!("epsilon must be positive");
    }
    let instances = match &args.instance_file {
        Some(path) => {
            let list: Vec<InstanceSpec> = serde_json::from_reader(open(path)?)
                .with_context(|| format!("malformed instance file {}", path.display()))?;
            for spec in &list {
                spec.dims.validate()?;
            }
            list
        }
        None => {
            dims.validate()?;
            suite_instances(args.instances, args.seed, dims, args.lambda)
        }
    };
    let variants = Variant::all();
    let start = Instant::now();
    let rows = run_suite(&instances, &variants, args.epsilon, args.parallel)?;
    write_results_csv(create(&args.out)?, &rows)?;
    let mut meta_path = args.out.clone().into_os_string();
    meta_path.push(".meta.json");
    write_json(
        Some(Path::new(&meta_path)),
        &SuiteMetadata::new(&instances, &variants, args.epsilon),
    )?;
    let converged = rows.iter().filter(|r| r.converged()).count();
    eprintln!(
        "{} runs ({} converged) in {:.1}s -> {}",
        rows.len(),
        converged,
        start.elapsed().as_secs_f64(),
        args.out.display()
    );
    for v in &variants {
        if let Some(med) = median_prox_evals(&rows, &v.name()) {
            eprintln!("  {:<18} median prox evals {med}", v.name());
        }
    }
    Ok(0)
}

fn cmd_profile(args: &ProfileArgs) -> Result<u8> {
    let rows = read_results_csv(open(&args.results)?)
        .with_context(|| format!("malformed results {}", args.results.display()))?;
    let metric = match args.metric {
        MetricArg::Prox => ProfileMetric::ProxEvals,
        MetricArg::Objective => ProfileMetric::Objective,
    };
    let curves = performance_profile(&rows, metric)?;
    for path in write_profile_files(&args.out_dir, &curves)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Profile(a) => cmd_profile(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
