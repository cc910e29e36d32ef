use std::fs;
use std::path::Path;
use std::process::Command;

use vqls::engine::Mode;
use vqls_bench::runner::RunStatus;
use vqls_bench::spec::Plan;
use vqls_bench::{load_records, run_experiment, write_reports, ExperimentSpec, Family};

fn small(family: Family) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(family);
    spec.qubits = vec![2];
    spec.replicates = Some(2);
    spec.max_iterations = 60;
    spec
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().skip(1).collect()
}

#[test]
fn single_identity_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Family::Single);
    spec.identity = true;
    spec.modes = vec![Mode::Asa];
    let result = run_experiment(&spec, dir.path(), Some(1)).unwrap();
    assert_eq!(result.records.len(), 1);
    let m = result.records[0].metrics.unwrap();
    assert!(m.converged);
    assert!(m.trc > 0);
    let summary = read(dir.path(), "summary.csv");
    let rows = data_rows(&summary);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("single,"));
    assert_eq!(result.report.summary[0].n_converged, 1);
}

#[test]
fn sp_sweep_has_one_row_per_sp() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(Family::SpSweep), dir.path(), None).unwrap();
    assert_eq!(result.report.summary.len(), 4);
    let summary = read(dir.path(), "summary.csv");
    let keys: Vec<&str> = data_rows(&summary)
        .iter()
        .map(|r| r.split(',').next().unwrap())
        .collect();
    assert_eq!(keys, ["sp=0.1", "sp=0.01", "sp=0.001", "sp=0.00001"]);
    // four ADA settings plus the baseline
    assert_eq!(data_rows(&read(dir.path(), "sp_table.csv")).len(), 5);
    // one shared ASA run per problem
    let asa_runs = result.records.iter().filter(|r| r.config.mode == Mode::Asa).count();
    assert_eq!(asa_runs, 2);
}

#[test]
fn paired_runs_share_problem_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&small(Family::KappaSweep), dir.path(), None).unwrap();
    for pair in &result.plan.pairs {
        let ada = &result.records[pair.ada.unwrap()];
        let asa = &result.records[pair.asa.unwrap()];
        assert_eq!(ada.problem_hash, asa.problem_hash);
        assert_eq!(ada.problem_id, asa.problem_id);
        let file = fs::read(dir.path().join("problems").join(format!("{}.json", ada.problem_id))).unwrap();
        assert_eq!(vqls_bench::sha256_hex(&file), ada.problem_hash);
    }
    let pairs = read(dir.path(), "pairs.csv");
    assert_eq!(data_rows(&pairs).len(), result.plan.pairs.len());
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let spec = small(Family::SparsitySweep);
    let ra = run_experiment(&spec, a.path(), Some(1)).unwrap();
    let rb = run_experiment(&spec, b.path(), None).unwrap();
    assert_eq!(ra.report.files, rb.report.files);
    for name in ra.report.files.keys() {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));
}

#[test]
fn resume_skips_validated_runs_and_redoes_tampered_ones() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Family::KappaSweep);
    let first = run_experiment(&spec, dir.path(), None).unwrap();
    assert_eq!(first.resumed, 0);
    let manifest = read(dir.path(), "manifest.json");

    let second = run_experiment(&spec, dir.path(), None).unwrap();
    assert_eq!(second.resumed, first.records.len());
    assert_eq!(read(dir.path(), "manifest.json"), manifest);

    let victim = &first.records[0].run_id;
    let trace = dir.path().join("traces").join(format!("{victim}.jsonl"));
    fs::write(&trace, "{}\n").unwrap();
    let third = run_experiment(&spec, dir.path(), None).unwrap();
    assert_eq!(third.resumed, first.records.len() - 1);
    assert_eq!(read(dir.path(), "manifest.json"), manifest);
}

#[test]
fn report_rebuilds_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(Family::SpSweep);
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    let before = read(dir.path(), "summary.csv");
    fs::remove_file(dir.path().join("summary.csv")).unwrap();
    let (spec2, plan, problems, records) = load_records(dir.path()).unwrap();
    assert_eq!(records, result.records);
    let report = write_reports(dir.path(), &spec2, &plan, &problems, &records).unwrap();
    assert_eq!(read(dir.path(), "summary.csv"), before);
    assert_eq!(report.files, result.report.files);
}

#[test]
fn empty_batch_writes_headers_and_zero_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(Family::Single).resolved();
    fs::write(dir.path().join("spec.json"), "{}").unwrap();
    write_reports(dir.path(), &spec, &Plan::default(), &[], &[]).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["runs"], 0);
    assert_eq!(manifest["pairs"], 0);
    for name in ["runs.csv", "pairs.csv", "summary.csv", "artrc.csv", "curves.csv"] {
        assert_eq!(read(dir.path(), name).lines().count(), 1, "{name}");
    }
}

#[test]
fn one_run_gives_one_row_with_its_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Family::Single);
    spec.modes = vec![Mode::Ada];
    spec.max_iterations = 40;
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    let m = result.records[0].metrics.unwrap();
    let runs = read(dir.path(), "runs.csv");
    let header: Vec<&str> = runs.lines().next().unwrap().split(',').collect();
    let rows = data_rows(&runs);
    assert_eq!(rows.len(), 1);
    let row: Vec<&str> = rows[0].split(',').collect();
    let field = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(field("trc"), m.trc.to_string());
    assert_eq!(field("final_layers"), m.final_layers.to_string());
    assert_eq!(field("total_iterations"), m.total_iterations.to_string());
    assert_eq!(field("converged"), m.converged.to_string());
    assert_eq!(field("eqd_proxy"), m.eqd_proxy.to_string());
    assert_eq!(field("final_cost").parse::<f64>().unwrap(), m.final_cost);
    let curves = read(dir.path(), "curves.csv");
    assert_eq!(data_rows(&curves).len(), m.total_iterations);
}

#[test]
fn failed_problems_are_recorded_and_the_batch_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = small(Family::SparsitySweep);
    // 0.9 of 16 entries leaves too few nonzeros for a full diagonal
    spec.sparsities = vec![0.9, 0.5];
    spec.replicates = Some(1);
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    assert_eq!(result.failures(), 2);
    let failed: Vec<_> = result
        .records
        .iter()
        .filter(|r| r.status == RunStatus::Failed)
        .collect();
    assert!(failed
        .iter()
        .all(|r| r.error.as_deref().unwrap().contains("problem unavailable")));
    assert!(result.records.iter().any(|r| r.status == RunStatus::Ok));
    assert_eq!(result.report.summary.len(), 2);
    assert_eq!(result.report.summary[0].n_converged, 0);
}

fn vqls() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vqls"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    let status = vqls()
        .args(["solve", "--identity", "--qubits", "2", "--mode", "asa", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("manifest.json").exists());

    let status = vqls()
        .args([
            "sweep",
            "SPARSITY_SWEEP",
            "--qubits",
            "2",
            "--sparsity",
            "0.9",
            "--replicates",
            "1",
        ])
        .args(["--max-iters", "5", "--out"])
        .arg(dir.path().join("fail"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    let status = vqls()
        .args(["sweep", "KAPPA_SWEEP", "--kappa", "0.5", "--out"])
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = vqls().args(["sweep", "NOT_A_FAMILY"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_generate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    let status = vqls()
        .args(["generate", "--qubits", "3", "--kappa", "5", "--seed", "4", "--out"])
        .arg(&file)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let problem = vqls::SLEProblem::from_json(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(problem.n_qubits, 3);
    assert!((problem.meta.kappa - 5.0).abs() < 1e-6);

    let out = dir.path().join("run");
    let status = vqls()
        .args(["solve", "--mode", "ada", "--max-iters", "30", "--problem"])
        .arg(&file)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let summary = fs::read(out.join("summary.csv")).unwrap();
    let status = vqls().arg("report").arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(fs::read(out.join("summary.csv")).unwrap(), summary);
}
