use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vqls::engine::{Mode, ShotEstimator};
use vqls::metrics::SummaryRow;
use vqls::noise::load_noise_model;
use vqls::simulator::EvalMode;
use vqls::{generate_sle, SLEProblem};
use vqls_bench::{load_records, run_experiment, write_reports, BenchError, ExperimentSpec, Family};

/// Variational linear solver experiments.
#[derive(Parser)]
#[command(name = "vqls", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random linear system and write it as JSON.
    Generate(GenerateArgs),
    /// Solve one system with one ansatz mode.
    Solve(SolveArgs),
    /// Run an experiment family as paired ADA/ASA runs.
    Sweep(SweepArgs),
    /// Rebuild the tables of a finished experiment directory.
    Report {
        #[arg(long, default_value = "vqls-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use A = I with a random right-hand side.
    #[arg(long)]
    identity: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Asa,
    Ada,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Shots,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    SwapHadamard,
    PauliExpectation,
}

/// Settings shared by `solve` and `sweep`. Unset values keep the spec or
/// family defaults.
#[derive(Args)]
struct RunArgs {
    /// ASA layer count (default d_min).
    #[arg(long)]
    layers: Option<usize>,
    /// ADA layer cap (default d_min).
    #[arg(long)]
    layer_cap: Option<usize>,
    /// Switching parameter; repeat or comma-separate for SP_SWEEP
    /// (default (1 − dt) / max-iters).
    #[arg(long, value_delimiter = ',')]
    sp: Vec<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Shots per circuit (default 10000).
    #[arg(long)]
    shots: Option<u64>,
    /// Noise model JSON file; implies the shots backend.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Noise trajectories per circuit (default 8).
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Convergence threshold on the cost (default 0.1).
    #[arg(long)]
    dt: Option<f64>,
    /// Gradient-descent step (default 0.05).
    #[arg(long)]
    step: Option<f64>,
    /// Iteration limit (default 6400).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Worker threads (default one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "vqls-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON file; generated from the flags below when omitted.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    #[arg(long)]
    identity: bool,
    #[arg(long, value_enum, default_value = "ada")]
    mode: ModeArg,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// QUBIT_SWEEP, KAPPA_SWEEP, SPARSITY_SWEEP, NOISE_COMPARE, SP_SWEEP or SINGLE.
    family: Family,
    /// Base experiment spec (JSON); flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Systems per grid cell (default 5).
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    qubits: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    sparsity: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
}

impl RunArgs {
    fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(dt) = self.dt {
            spec.threshold = dt;
        }
        if let Some(step) = self.step {
            spec.step_size = step;
        }
        if let Some(max) = self.max_iters {
            spec.max_iterations = max;
        }
        if self.layers.is_some() {
            spec.layers = self.layers;
        }
        if self.layer_cap.is_some() {
            spec.layer_cap = self.layer_cap;
        }
        if !self.sp.is_empty() {
            spec.sps = self.sp.clone();
        }
        let touched = self.backend.is_some()
            || self.shots.is_some()
            || self.noise.is_some()
            || self.trajectories.is_some()
            || self.estimator.is_some();
        if touched {
            let mut b = spec
                .backend
                .clone()
                .unwrap_or_else(|| spec.resolved().backend.expect("resolved"));
            if let Some(path) = &self.noise {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| BenchError::Spec(format!("{}: {e}", path.display())))?;
                b.noise = Some(load_noise_model(&value).map_err(|e| BenchError::Spec(e.to_string()))?);
                b.mode = EvalMode::Shots;
            }
            match self.backend {
                Some(BackendArg::Exact) => b.mode = EvalMode::Exact,
                Some(BackendArg::Shots) => b.mode = EvalMode::Shots,
                None => {}
            }
            if let Some(shots) = self.shots {
                b.shots = shots;
            }
            if let Some(t) = self.trajectories {
                b.trajectories = t;
            }
            match self.estimator {
                Some(EstimatorArg::SwapHadamard) => b.estimator = ShotEstimator::SwapHadamard,
                Some(EstimatorArg::PauliExpectation) => b.estimator = ShotEstimator::PauliExpectation,
                None => {}
            }
            spec.backend = Some(b);
        }
        Ok(())
    }
}

fn print_summary(rows: &[SummaryRow]) {
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"));
    println!(
        "{:<18} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9} {:>7} {:>9}",
        "group", "trc_ada", "trc_asa", "fl_ada", "fl_asa", "it_ada", "it_asa", "wins%", "conv"
    );
    for r in rows {
        println!(
            "{:<18} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9} {:>7} {:>9}",
            r.group_key,
            f(r.mean_trc_ada),
            f(r.mean_trc_asa),
            f(r.mean_final_layers_ada),
            f(r.mean_final_layers_asa),
            f(r.mean_iters_ada),
            f(r.mean_iters_asa),
            f(r.pct_ada_wins),
            format!("{}/{}", r.n_converged, r.n_total),
        );
    }
}

/// Runs a batch; per-run failures map to exit code 1.
fn execute(spec: &ExperimentSpec, args: &RunArgs) -> Result<ExitCode> {
    let result = run_experiment(spec, &args.out, args.workers)?;
    print_summary(&result.report.summary);
    let failures = result.failures();
    println!(
        "{} runs ({} resumed, {} failed) written to {}",
        result.records.len(),
        result.resumed,
        failures,
        args.out.display()
    );
    Ok(if failures > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn generate(args: &GenerateArgs) -> Result<ExitCode> {
    let mut problem = generate_sle(
        args.qubits,
        if args.identity { 1.0 } else { args.kappa },
        args.sparsity,
        args.seed,
    )
    .map_err(|e| BenchError::Spec(e.to_string()))?;
    if args.identity {
        problem = SLEProblem::identity(args.qubits, problem.b)?;
    }
    let json = problem.to_json()? + "\n";
    match &args.out {
        Some(path) => {
            write_file(path, &json)?;
            eprintln!(
                "wrote {} (kappa {:.4}, sparsity {:.4})",
                path.display(),
                problem.meta.kappa,
                problem.meta.sparsity
            );
        }
        None => print!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::new(Family::Single);
    spec.qubits = vec![args.qubits];
    spec.kappas = vec![args.kappa];
    spec.sparsities = vec![args.sparsity];
    spec.identity = args.identity;
    spec.problem_file = args.problem.clone();
    spec.modes = vec![match args.mode {
        ModeArg::Asa => Mode::Asa,
        ModeArg::Ada => Mode::Ada,
    }];
    args.run.apply(&mut spec)?;
    if spec.identity && spec.problem_file.is_some() {
        bail!(BenchError::Spec("--identity and --problem are exclusive".into()));
    }
    execute(&spec, &args.run)
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec = ExperimentSpec::from_json(&text)?;
            if spec.family != args.family {
                bail!(BenchError::Spec(format!(
                    "spec file describes {}, not {}",
                    spec.family, args.family
                )));
            }
            spec
        }
        None => ExperimentSpec::new(args.family),
    };
    if args.replicates.is_some() {
        spec.replicates = args.replicates;
    }
    if !args.qubits.is_empty() {
        spec.qubits = args.qubits.clone();
    }
    if !args.kappa.is_empty() {
        spec.kappas = args.kappa.clone();
    }
    if !args.sparsity.is_empty() {
        spec.sparsities = args.sparsity.clone();
    }
    args.run.apply(&mut spec)?;
    execute(&spec, &args.run)
}

fn report(out: &Path) -> Result<ExitCode> {
    let (spec, plan, problems, records) = load_records(out)?;
    let report = write_reports(out, &spec, &plan, &problems, &records)?;
    print_summary(&report.summary);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Report { out } => report(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
