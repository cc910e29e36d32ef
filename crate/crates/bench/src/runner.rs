//! Batch execution: problem materialization, run identity, resumable runs.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vqls::engine::{run, Mode, OptimizerConfig};
use vqls::metrics::{run_metrics, RunMetrics};
use vqls::simulator::EvalBackend;
use vqls::{generate_sle, SLEProblem};

use crate::error::{io_error, BenchError, Result};
use crate::report::{write_reports, BatchReport};
use crate::sha256_hex;
use crate::spec::{ExperimentSpec, JobPlan, Plan, ProblemPlan, ProblemSource};

pub const PROBLEMS_DIR: &str = "problems";
pub const TRACES_DIR: &str = "traces";
pub const RUNS_DIR: &str = "runs";
pub const SPEC_FILE: &str = "spec.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Contents of `runs/{run_id}.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub problem_id: String,
    pub problem_hash: String,
    pub config: OptimizerConfig,
    pub backend: EvalBackend,
    pub status: RunStatus,
    pub error: Option<String>,
    pub metrics: Option<RunMetrics>,
    /// SHA-256 of the trace file; resumption checks it.
    pub trace_sha256: Option<String>,
    pub final_params: Option<Vec<f64>>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

/// A problem written to `problems/`, or the reason it could not be built.
#[derive(Clone, Debug)]
pub struct Materialized {
    pub id: String,
    pub outcome: std::result::Result<(SLEProblem, String), String>,
}

impl Materialized {
    pub fn hash(&self) -> &str {
        self.outcome.as_ref().map(|(_, h)| h.as_str()).unwrap_or("unavailable")
    }
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub plan: Plan,
    /// One record per job, in plan order.
    pub records: Vec<RunRecord>,
    pub resumed: usize,
    pub report: BatchReport,
}

impl BatchResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }
}

/// Runs every job of `spec` under `out`. `workers` bounds the pool width
/// (`None` uses one thread per core). Per-run failures are recorded and the
/// batch continues; only spec and output-directory problems are errors.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, workers: Option<usize>) -> Result<BatchResult> {
    let plan = spec.plan()?;
    let resolved = spec.resolved();
    for dir in [PROBLEMS_DIR, TRACES_DIR, RUNS_DIR] {
        let path = out.join(dir);
        fs::create_dir_all(&path).map_err(io_error(path))?;
    }
    write_if_changed(&out.join(SPEC_FILE), &(serde_json::to_string_pretty(&resolved)? + "\n"))?;

    let problems = plan
        .problems
        .iter()
        .map(|p| materialize(p, out, true))
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Spec(format!("worker pool: {e}")))?;
    let outcomes: Vec<(RunRecord, bool)> = pool.install(|| {
        plan.jobs
            .par_iter()
            .map(|job| execute(job, &problems[job.problem], out))
            .collect::<Result<Vec<_>>>()
    })?;
    let resumed = outcomes.iter().filter(|(_, r)| *r).count();
    let records: Vec<RunRecord> = outcomes.into_iter().map(|(r, _)| r).collect();

    let report = write_reports(out, &resolved, &plan, &problems, &records)?;
    Ok(BatchResult {
        plan,
        records,
        resumed,
        report,
    })
}

/// Builds (or, with `create == false`, only reads back) one problem file.
pub(crate) fn materialize(plan: &ProblemPlan, out: &Path, create: bool) -> Result<Materialized> {
    let path = problem_path(out, &plan.id);
    if !create {
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        let outcome = SLEProblem::from_json(&text)
            .map(|p| (p, sha256_hex(text.as_bytes())))
            .map_err(|e| e.to_string());
        return Ok(Materialized {
            id: plan.id.clone(),
            outcome,
        });
    }
    let built = match &plan.source {
        ProblemSource::Generated {
            n_qubits,
            kappa,
            sparsity,
        } => generate_sle(*n_qubits, *kappa, *sparsity, plan.seed),
        ProblemSource::Identity { n_qubits } => {
            generate_sle(*n_qubits, 1.0, 0.0, plan.seed).and_then(|p| SLEProblem::identity(*n_qubits, p.b))
        }
        ProblemSource::File(src) => {
            let text = fs::read_to_string(src).map_err(io_error(src))?;
            SLEProblem::from_json(&text)
        }
    };
    let outcome = match built.and_then(|p| p.to_json().map(|j| (p, j))) {
        Ok((problem, json)) => {
            let text = json + "\n";
            write_if_changed(&path, &text)?;
            Ok((problem, sha256_hex(text.as_bytes())))
        }
        Err(e) => {
            warn!("problem {}: {e}", plan.id);
            Err(e.to_string())
        }
    };
    Ok(Materialized {
        id: plan.id.clone(),
        outcome,
    })
}

/// Stable identifier of a job: problem, mode and a hash of everything that
/// determines the run.
pub fn run_id(job: &JobPlan, problem: &Materialized) -> String {
    let key = serde_json::to_string(&(problem.hash(), &job.config, &job.backend)).expect("configs serialize");
    let mode = match job.config.mode {
        Mode::Ada => "ada",
        Mode::Asa => "asa",
    };
    format!("{}_{mode}_{}", problem.id, &sha256_hex(key.as_bytes())[..12])
}

pub(crate) fn problem_path(out: &Path, id: &str) -> PathBuf {
    out.join(PROBLEMS_DIR).join(format!("{id}.json"))
}

pub(crate) fn trace_path(out: &Path, run_id: &str) -> PathBuf {
    out.join(TRACES_DIR).join(format!("{run_id}.jsonl"))
}

pub(crate) fn record_path(out: &Path, run_id: &str) -> PathBuf {
    out.join(RUNS_DIR).join(format!("{run_id}.json"))
}

/// Reads a record back if it completed and its trace still hashes to the
/// recorded digest.
pub(crate) fn validated_record(out: &Path, run_id: &str) -> Option<RunRecord> {
    let record: RunRecord = serde_json::from_str(&fs::read_to_string(record_path(out, run_id)).ok()?).ok()?;
    let trace = fs::read(trace_path(out, run_id)).ok()?;
    (record.is_ok() && record.trace_sha256.as_deref() == Some(sha256_hex(&trace).as_str())).then_some(record)
}

fn execute(job: &JobPlan, problem: &Materialized, out: &Path) -> Result<(RunRecord, bool)> {
    let id = run_id(job, problem);
    if let Some(record) = validated_record(out, &id) {
        info!("{id}: resumed");
        return Ok((record, true));
    }
    let mut record = RunRecord {
        run_id: id.clone(),
        problem_id: problem.id.clone(),
        problem_hash: problem.hash().to_string(),
        config: job.config.clone(),
        backend: job.backend.clone(),
        status: RunStatus::Failed,
        error: None,
        metrics: None,
        trace_sha256: None,
        final_params: None,
    };
    let trace_file = trace_path(out, &id);
    let result = problem
        .outcome
        .as_ref()
        .map_err(|e| format!("problem unavailable: {e}"))
        .and_then(|(p, _)| {
            let trace = run(p, &job.config, &job.backend).map_err(|e| e.to_string())?;
            let metrics = run_metrics(&trace).map_err(|e| e.to_string())?;
            Ok((trace, metrics))
        });
    match result {
        Ok((trace, metrics)) => {
            let jsonl = trace.to_jsonl();
            fs::write(&trace_file, &jsonl).map_err(io_error(&trace_file))?;
            info!(
                "{id}: converged {} after {} iterations, trc {}",
                metrics.converged, metrics.total_iterations, metrics.trc
            );
            record.status = RunStatus::Ok;
            record.metrics = Some(metrics);
            record.trace_sha256 = Some(sha256_hex(jsonl.as_bytes()));
            record.final_params = Some(trace.final_params.to_vec());
        }
        Err(e) => {
            warn!("{id}: {e}");
            if trace_file.exists() {
                fs::remove_file(&trace_file).map_err(io_error(&trace_file))?;
            }
            record.error = Some(e);
        }
    }
    let path = record_path(out, &id);
    fs::write(&path, serde_json::to_string_pretty(&record)? + "\n").map_err(io_error(&path))?;
    Ok((record, false))
}

fn write_if_changed(path: &Path, text: &str) -> Result<()> {
    if fs::read(path).ok().as_deref() == Some(text.as_bytes()) {
        return Ok(());
    }
    fs::write(path, text).map_err(io_error(path))
}
