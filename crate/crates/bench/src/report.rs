//! Summary tables and the manifest of an experiment directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use vqls::engine::{Mode, TraceRecord};
use vqls::metrics::{artrc_deviation, mean_artrc, summarize_batch, RunMetrics, SummaryRow};
use vqls::simulator::EvalMode;

use crate::error::{io_error, spec_error, BenchError, Result};
use crate::runner::{
    materialize, problem_path, record_path, run_id, trace_path, validated_record, Materialized, RunRecord, SPEC_FILE,
};
use crate::sha256_hex;
use crate::spec::{ExperimentSpec, Family, Plan};

pub const RUNS_CSV: &str = "runs.csv";
pub const PAIRS_CSV: &str = "pairs.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const ARTRC_CSV: &str = "artrc.csv";
pub const SP_TABLE_CSV: &str = "sp_table.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtrcRow {
    pub group_key: String,
    pub mean_artrc_deviation: Option<f64>,
    pub n_converged: usize,
}

/// One row of the switching-parameter table: an ADA setting or the ASA
/// baseline, over problems on which every setting converged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpRow {
    pub setting: String,
    pub mean_trc: Option<f64>,
    pub mean_final_layers: Option<f64>,
    /// Share of problems on which this setting has the lowest TRC (ties
    /// count for every tied setting).
    pub pct_min_trc: Option<f64>,
    /// Share of problems on which ADA finished below its layer cap.
    pub pct_final_layers_below_cap: Option<f64>,
    pub n_cases: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub summary: Vec<SummaryRow>,
    pub artrc: Vec<ArtrcRow>,
    pub sp_table: Vec<SpRow>,
    /// Relative path → SHA-256 of every artifact, as in the manifest.
    pub files: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct RunRow<'a> {
    run_id: &'a str,
    problem_id: &'a str,
    problem_hash: &'a str,
    mode: Mode,
    n_qubits: usize,
    layer_cap: usize,
    sp: f64,
    seed: u64,
    backend: EvalMode,
    shots: Option<u64>,
    noisy: bool,
    status: &'a str,
    trc: Option<u64>,
    final_layers: Option<usize>,
    total_iterations: Option<usize>,
    converged: Option<bool>,
    eqd_proxy: Option<u64>,
    final_cost: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct PairRow<'a> {
    group_key: &'a str,
    replicate: usize,
    problem_id: &'a str,
    problem_hash: &'a str,
    ada_run: Option<&'a str>,
    asa_run: Option<&'a str>,
    trc_ada: Option<u64>,
    trc_asa: Option<u64>,
    both_converged: bool,
    artrc_deviation: Option<f64>,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    run_id: &'a str,
    t: usize,
    cost: f64,
    layers: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    family: Family,
    spec: &'a ExperimentSpec,
    runs: usize,
    failed_runs: usize,
    pairs: usize,
    converged_pairs: usize,
    files: &'a BTreeMap<String, String>,
}

const RUNS_HEADER: [&str; 19] = [
    "run_id",
    "problem_id",
    "problem_hash",
    "mode",
    "n_qubits",
    "layer_cap",
    "sp",
    "seed",
    "backend",
    "shots",
    "noisy",
    "status",
    "trc",
    "final_layers",
    "total_iterations",
    "converged",
    "eqd_proxy",
    "final_cost",
    "error",
];
const PAIRS_HEADER: [&str; 10] = [
    "group_key",
    "replicate",
    "problem_id",
    "problem_hash",
    "ada_run",
    "asa_run",
    "trc_ada",
    "trc_asa",
    "both_converged",
    "artrc_deviation",
];
const SUMMARY_HEADER: [&str; 10] = [
    "group_key",
    "mean_trc_ada",
    "mean_trc_asa",
    "mean_final_layers_ada",
    "mean_final_layers_asa",
    "mean_iters_ada",
    "mean_iters_asa",
    "pct_ada_wins",
    "n_converged",
    "n_total",
];
const ARTRC_HEADER: [&str; 3] = ["group_key", "mean_artrc_deviation", "n_converged"];
const SP_HEADER: [&str; 6] = [
    "setting",
    "mean_trc",
    "mean_final_layers",
    "pct_min_trc",
    "pct_final_layers_below_cap",
    "n_cases",
];
const CURVES_HEADER: [&str; 4] = ["run_id", "t", "cost", "layers"];

/// CSV text with an explicit header, so empty tables still carry one.
fn csv_text<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Failed runs count as unconverged.
fn metrics_of(record: &RunRecord) -> RunMetrics {
    record.metrics.unwrap_or(RunMetrics {
        trc: 0,
        final_layers: 0,
        total_iterations: 0,
        converged: false,
        eqd_proxy: 0,
        final_cost: f64::NAN,
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn group_row(key: &str, sides: &[(Option<RunMetrics>, Option<RunMetrics>)]) -> Result<SummaryRow> {
    if sides.iter().all(|(a, s)| a.is_some() && s.is_some()) {
        let pairs: Vec<_> = sides.iter().map(|(a, s)| (a.unwrap(), s.unwrap())).collect();
        return Ok(summarize_batch(key, &pairs)?);
    }
    // single-mode group: only one side is populated
    type Sides = (Option<RunMetrics>, Option<RunMetrics>);
    let side = |pick: fn(&Sides) -> Option<RunMetrics>| {
        let ok: Vec<RunMetrics> = sides.iter().filter_map(pick).filter(|m| m.converged).collect();
        let trc: Vec<f64> = ok.iter().map(|m| m.trc as f64).collect();
        let layers: Vec<f64> = ok.iter().map(|m| m.final_layers as f64).collect();
        let iters: Vec<f64> = ok.iter().map(|m| m.total_iterations as f64).collect();
        (mean(&trc), mean(&layers), mean(&iters), ok.len())
    };
    let (ta, la, ia, na) = side(|p| p.0);
    let (ts, ls, is, ns) = side(|p| p.1);
    Ok(SummaryRow {
        group_key: key.to_string(),
        mean_trc_ada: ta,
        mean_trc_asa: ts,
        mean_final_layers_ada: la,
        mean_final_layers_asa: ls,
        mean_iters_ada: ia,
        mean_iters_asa: is,
        pct_ada_wins: None,
        n_converged: na + ns,
        n_total: sides.len(),
    })
}

fn sp_table(plan: &Plan, records: &[RunRecord]) -> Vec<SpRow> {
    // per problem: every ADA setting plus the shared ASA baseline
    type Runs = (Option<usize>, Vec<(String, usize)>);
    let mut by_problem: BTreeMap<usize, Runs> = BTreeMap::new();
    for pair in &plan.pairs {
        let entry = by_problem.entry(pair.problem).or_default();
        entry.0 = entry.0.or(pair.asa);
        if let Some(ada) = pair.ada {
            entry.1.push((pair.group_key.clone(), ada));
        }
    }
    let mut settings: Vec<String> = plan.groups.clone();
    settings.push("asa".into());
    let mut trc: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut layers: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
    let mut below: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cases = 0;
    for (asa, adas) in by_problem.values() {
        let mut runs: Vec<(&str, usize)> = adas.iter().map(|(k, j)| (k.as_str(), *j)).collect();
        if let Some(j) = asa {
            runs.push(("asa", *j));
        }
        let metrics: Vec<(&str, RunMetrics, usize)> = runs
            .iter()
            .map(|&(k, j)| (k, metrics_of(&records[j]), plan.jobs[j].config.layer_cap))
            .collect();
        if metrics.len() != settings.len() || !metrics.iter().all(|(_, m, _)| m.converged) {
            continue;
        }
        cases += 1;
        let best = metrics.iter().map(|(_, m, _)| m.trc).min().expect("nonempty");
        for (k, m, cap) in &metrics {
            trc.entry(k).or_default().push(m.trc as f64);
            layers.entry(k).or_default().push(m.final_layers as f64);
            *wins.entry(k).or_default() += usize::from(m.trc == best);
            *below.entry(k).or_default() += usize::from(m.final_layers < *cap);
        }
    }
    let pct = |count: usize| (cases > 0).then(|| 100.0 * count as f64 / cases as f64);
    settings
        .iter()
        .map(|s| {
            let k = s.as_str();
            SpRow {
                setting: s.clone(),
                mean_trc: trc.get(k).and_then(|v| mean(v)),
                mean_final_layers: layers.get(k).and_then(|v| mean(v)),
                pct_min_trc: pct(wins.get(k).copied().unwrap_or(0)),
                pct_final_layers_below_cap: if k == "asa" {
                    None
                } else {
                    pct(below.get(k).copied().unwrap_or(0))
                },
                n_cases: cases,
            }
        })
        .collect()
}

/// Writes every table and the manifest. `records` is aligned with
/// `plan.jobs`.
pub fn write_reports(
    out: &Path,
    spec: &ExperimentSpec,
    plan: &Plan,
    problems: &[Materialized],
    records: &[RunRecord],
) -> Result<BatchReport> {
    assert_eq!(records.len(), plan.jobs.len(), "one record per job");
    let mut tables: Vec<(&str, String)> = Vec::new();

    let run_rows: Vec<RunRow> = plan
        .jobs
        .iter()
        .zip(records)
        .map(|(job, r)| {
            let m = r.metrics.as_ref();
            RunRow {
                run_id: &r.run_id,
                problem_id: &r.problem_id,
                problem_hash: &r.problem_hash,
                mode: job.config.mode,
                n_qubits: problems[job.problem].outcome.as_ref().map_or(0, |(p, _)| p.n_qubits),
                layer_cap: job.config.layer_cap,
                sp: job.config.sp,
                seed: job.config.seed,
                backend: job.backend.mode,
                shots: (job.backend.mode == EvalMode::Shots).then_some(job.backend.shots),
                noisy: job.backend.active_noise().is_some(),
                status: if r.is_ok() { "ok" } else { "failed" },
                trc: m.map(|m| m.trc),
                final_layers: m.map(|m| m.final_layers),
                total_iterations: m.map(|m| m.total_iterations),
                converged: m.map(|m| m.converged),
                eqd_proxy: m.map(|m| m.eqd_proxy),
                final_cost: m.map(|m| m.final_cost),
                error: r.error.as_deref(),
            }
        })
        .collect();
    tables.push((RUNS_CSV, csv_text(&RUNS_HEADER, &run_rows)?));

    let side = |job: Option<usize>| job.map(|j| metrics_of(&records[j]));
    let pair_rows: Vec<PairRow> = plan
        .pairs
        .iter()
        .map(|pair| {
            let (ada, asa) = (side(pair.ada), side(pair.asa));
            let both = matches!((ada, asa), (Some(a), Some(s)) if a.converged && s.converged);
            PairRow {
                group_key: &pair.group_key,
                replicate: pair.replicate,
                problem_id: &problems[pair.problem].id,
                problem_hash: problems[pair.problem].hash(),
                ada_run: pair.ada.map(|j| records[j].run_id.as_str()),
                asa_run: pair.asa.map(|j| records[j].run_id.as_str()),
                trc_ada: ada.filter(|m| m.converged).map(|m| m.trc),
                trc_asa: asa.filter(|m| m.converged).map(|m| m.trc),
                both_converged: both,
                artrc_deviation: if both {
                    artrc_deviation(ada.unwrap().trc, asa.unwrap().trc).ok()
                } else {
                    None
                },
            }
        })
        .collect();
    tables.push((PAIRS_CSV, csv_text(&PAIRS_HEADER, &pair_rows)?));

    let mut summary = Vec::new();
    let mut artrc = Vec::new();
    for key in &plan.groups {
        let sides: Vec<_> = plan
            .pairs
            .iter()
            .filter(|p| &p.group_key == key)
            .map(|p| (side(p.ada), side(p.asa)))
            .collect();
        let row = group_row(key, &sides)?;
        let complete: Vec<_> = sides.iter().filter_map(|(a, s)| a.zip(*s)).collect();
        artrc.push(ArtrcRow {
            group_key: key.clone(),
            mean_artrc_deviation: mean_artrc(&complete)?,
            n_converged: complete.iter().filter(|(a, s)| a.converged && s.converged).count(),
        });
        summary.push(row);
    }
    tables.push((SUMMARY_CSV, csv_text(&SUMMARY_HEADER, &summary)?));
    tables.push((ARTRC_CSV, csv_text(&ARTRC_HEADER, &artrc)?));

    let sp_rows = if spec.family == Family::SpSweep {
        sp_table(plan, records)
    } else {
        Vec::new()
    };
    if spec.family == Family::SpSweep {
        tables.push((SP_TABLE_CSV, csv_text(&SP_HEADER, &sp_rows)?));
    }

    let mut curves = Vec::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        let path = trace_path(out, &r.run_id);
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        for line in text.lines() {
            let rec: TraceRecord = serde_json::from_str(line)?;
            curves.push((r.run_id.as_str(), rec));
        }
    }
    let curve_rows: Vec<CurveRow> = curves
        .iter()
        .map(|(id, rec)| CurveRow {
            run_id: id,
            t: rec.t,
            cost: rec.cost,
            layers: rec.layers,
        })
        .collect();
    tables.push((CURVES_CSV, csv_text(&CURVES_HEADER, &curve_rows)?));

    let mut files = BTreeMap::new();
    for (name, text) in &tables {
        let path = out.join(name);
        fs::write(&path, text).map_err(io_error(&path))?;
        files.insert(name.to_string(), sha256_hex(text.as_bytes()));
    }
    let mut hash_file = |rel: String| -> Result<()> {
        let path = out.join(&rel);
        let bytes = fs::read(&path).map_err(io_error(&path))?;
        files.insert(rel, sha256_hex(&bytes));
        Ok(())
    };
    hash_file(SPEC_FILE.to_string())?;
    for p in problems.iter().filter(|p| p.outcome.is_ok()) {
        hash_file(rel(out, &problem_path(out, &p.id)))?;
    }
    for r in records {
        hash_file(rel(out, &record_path(out, &r.run_id)))?;
        if r.is_ok() {
            hash_file(rel(out, &trace_path(out, &r.run_id)))?;
        }
    }

    let manifest = Manifest {
        family: spec.family,
        spec,
        runs: records.len(),
        failed_runs: records.iter().filter(|r| !r.is_ok()).count(),
        pairs: plan.pairs.len(),
        converged_pairs: pair_rows.iter().filter(|p| p.both_converged).count(),
        files: &files,
    };
    let path = out.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io_error(&path))?;

    Ok(BatchReport {
        summary,
        artrc,
        sp_table: sp_rows,
        files,
    })
}

fn rel(out: &Path, path: &Path) -> String {
    path.strip_prefix(out)
        .expect("artifact under the output directory")
        .to_string_lossy()
        .replace('\\', "/")
}

/// Reloads a finished experiment directory: its spec, plan, problems and
/// validated run records.
pub fn load_records(out: &Path) -> Result<(ExperimentSpec, Plan, Vec<Materialized>, Vec<RunRecord>)> {
    let path = out.join(SPEC_FILE);
    let text = fs::read_to_string(&path).map_err(io_error(&path))?;
    let spec = ExperimentSpec::from_json(&text)?;
    let plan = spec.plan()?;
    let problems = plan
        .problems
        .iter()
        .map(|p| materialize(p, out, false))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(plan.jobs.len());
    for job in &plan.jobs {
        let id = run_id(job, &problems[job.problem]);
        let record = match validated_record(out, &id) {
            Some(r) => r,
            None => {
                let path = record_path(out, &id);
                let text = fs::read_to_string(&path).map_err(io_error(&path))?;
                let r: RunRecord = serde_json::from_str(&text)?;
                if r.is_ok() {
                    return spec_error(format!("trace of {id} is missing or does not match its record"));
                }
                r
            }
        };
        records.push(record);
    }
    Ok((spec, plan, problems, records))
}
