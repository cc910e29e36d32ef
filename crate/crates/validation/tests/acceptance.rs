//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run a subset with `cargo test -p vqls-validation --test acceptance -- AC4 AC6`.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqls::ansatz::{AnsatzSpec, Entangler, ParamVector};
use vqls::d_min;
use vqls::engine::{
    choose_sp, cost_global, gradient, run, solution_state, CostEvaluator, Mode, OptimizerConfig, RunTrace,
    ShotEstimator, TraceRecord,
};
use vqls::metrics::trc_of_layers;
use vqls::problems::{classical_solve, fidelity, generate_sle, SLEProblem};
use vqls::simulator::EvalBackend;
use vqls_bench::{run_experiment, BackendSettings, BatchResult, ExperimentSpec, Family};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_complex_problem(n: usize, rng: &mut ChaCha8Rng) -> SLEProblem {
    let dim = 1 << n;
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let b = (0..dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    SLEProblem::new(a, b, 0).unwrap()
}

fn ry(theta: f64) -> DMatrix<Complex64> {
    let (s, co) = (theta / 2.0).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// `V(θ)|0⟩` from Kronecker products of single-qubit matrices and CZ sign
/// flips, qubit 0 being the leftmost factor.
fn dense_ansatz_state(spec: &AnsatzSpec, params: &[f64]) -> DVector<Complex64> {
    let n = spec.n_qubits;
    let dim = 1 << n;
    let mut x = DVector::from_fn(dim, |i, _| if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    for layer in 0..spec.n_layers {
        let mut u = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for q in 0..n {
            u = u.kronecker(&ry(params[layer * n + q]));
        }
        x = u * x;
        for (a, b) in spec.entangler_pairs(layer) {
            for i in 0..dim {
                if (i >> (n - 1 - a)) & 1 == 1 && (i >> (n - 1 - b)) & 1 == 1 {
                    x[i] = -x[i];
                }
            }
        }
    }
    x
}

/// `1 − |⟨b̂|A x⟩|² / ‖A x‖²` by plain linear algebra.
fn dense_cost(problem: &SLEProblem, spec: &AnsatzSpec, params: &[f64]) -> f64 {
    let psi = &problem.a * dense_ansatz_state(spec, params);
    let b = DVector::from_column_slice(&problem.b);
    let b_hat = &b / c(b.norm(), 0.0);
    1.0 - b_hat.dotc(&psi).norm_sqr() / psi.norm_squared()
}

/// Structural checks on one trace; returns a description of the first
/// violation.
fn trace_violation(
    layers: &[usize],
    mode: Mode,
    cap: usize,
    converged: bool,
    final_cost: f64,
    dt: f64,
) -> Option<String> {
    let first = *layers.first()?;
    match mode {
        Mode::Ada if first != 1 => return Some(format!("ADA starts at {first} layers")),
        Mode::Asa if layers.iter().any(|&d| d != cap) => return Some("ASA layer count changed".into()),
        _ => {}
    }
    if let Some(w) = layers.windows(2).find(|w| w[1] < w[0] || w[1] > w[0] + 1) {
        return Some(format!("layer step {} -> {}", w[0], w[1]));
    }
    if let Some(d) = layers.iter().find(|&&d| d > cap) {
        return Some(format!("{d} layers above cap {cap}"));
    }
    if converged && (final_cost.is_nan() || final_cost >= dt) {
        return Some(format!("converged with cost {final_cost} >= {dt}"));
    }
    None
}

fn check_trace(trace: &RunTrace, config: &OptimizerConfig) -> Option<String> {
    let layers: Vec<usize> = trace.layers().collect();
    if layers.last() != Some(&trace.final_layers()) {
        return Some("final ansatz differs from last record".into());
    }
    trace_violation(
        &layers,
        config.mode,
        config.layer_cap,
        trace.converged,
        trace.final_cost,
        config.threshold,
    )
}

/// Re-reads every trace of a batch from disk and checks it.
fn batch_violations(result: &BatchResult, out: &Path) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (job, record) in result.plan.jobs.iter().zip(&result.records) {
        let Some(m) = record.metrics else { continue };
        let text = std::fs::read_to_string(out.join("traces").join(format!("{}.jsonl", record.run_id))).unwrap();
        let layers: Vec<usize> = text
            .lines()
            .map(|l| serde_json::from_str::<TraceRecord>(l).unwrap().layers)
            .collect();
        checked += 1;
        if let Some(v) = trace_violation(
            &layers,
            job.config.mode,
            job.config.layer_cap,
            m.converged,
            m.final_cost,
            job.config.threshold,
        ) {
            bad.push(format!("{}: {v}", record.run_id));
        }
    }
    (checked, bad)
}

/// `(ada, asa)` metrics of every pair in a group, in plan order.
fn group_pairs(result: &BatchResult, key: &str) -> Vec<(vqls::RunMetrics, vqls::RunMetrics)> {
    result
        .plan
        .pairs
        .iter()
        .filter(|p| p.group_key == key)
        .filter_map(|p| {
            let a = result.records[p.ada?].metrics?;
            let s = result.records[p.asa?].metrics?;
            Some((a, s))
        })
        .collect()
}

fn ac1_trc_arithmetic() -> Outcome {
    let ada = trc_of_layers(&[1, 1, 2, 2, 3, 3, 3, 3, 4, 4]).unwrap();
    let asa = trc_of_layers(&[4; 7]).unwrap();
    outcome(
        ada == 22 && asa == 28,
        format!("ADA [1,1,2,2,3,3,3,3,4,4] -> {ada} (want 22); ASA 7x4 -> {asa} (want 28)"),
    )
}

fn ac2_sp_formula() -> Outcome {
    let a = choose_sp(0.1, 1000);
    let b = choose_sp(0.1, 1800);
    let ok = (a - 0.0009).abs() <= 1e-12 && (b - 0.0005).abs() <= 1e-12;
    outcome(
        ok,
        format!("choose_sp(0.1,1000) = {a:e}, choose_sp(0.1,1800) = {b:e}, tol 1e-12"),
    )
}

fn ac3_d_min() -> Outcome {
    let (four, five) = (d_min(4), d_min(5));
    outcome(four == 4 && five == 6, format!("d_min(4) = {four}, d_min(5) = {five}"))
}

fn ac4_cost_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = 1 + i % 3;
        let problem = random_complex_problem(n, &mut rng);
        let entangler = if rng.random::<bool>() {
            Entangler::CzLinear
        } else {
            Entangler::CzAlternating
        };
        let spec = AnsatzSpec::new(n, rng.random_range(1..=3)).with_entangler(entangler);
        let params = ParamVector::random(spec.n_params(), rng.random());
        let eval = CostEvaluator::new(&problem, EvalBackend::exact()).unwrap();
        let got = cost_global(&eval, &spec, &params).unwrap();
        worst = worst.max((got - dense_cost(&problem, &spec, &params)).abs());
    }
    outcome(
        worst <= 1e-10,
        format!("50 instances, n in {{1,2,3}}, max |diff| = {worst:.2e} (tol 1e-10)"),
    )
}

fn ac5_shots_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inside = 0;
    for trial in 0..100u64 {
        let problem = if trial % 2 == 0 {
            generate_sle(2, rng.random_range(1.0..10.0), 0.0, trial).unwrap()
        } else {
            random_complex_problem(2, &mut rng)
        };
        let spec = AnsatzSpec::new(2, d_min(2));
        let params = ParamVector::random(spec.n_params(), rng.random());
        let exact = cost_global(
            &CostEvaluator::new(&problem, EvalBackend::exact()).unwrap(),
            &spec,
            &params,
        )
        .unwrap();
        let shots = CostEvaluator::new(&problem, EvalBackend::shots(100_000, trial)).unwrap();
        let parts = shots.parts(&spec, &params, 0).unwrap();
        let est = parts.cost().unwrap();
        if parts.sigma > 0.0 && (est - exact).abs() <= 3.0 * parts.sigma {
            inside += 1;
        }
    }
    outcome(
        inside >= 95,
        format!("{inside}/100 trials within 3 sigma at 1e5 shots (need >= 95)"),
    )
}

fn ac6_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let problem = random_complex_problem(4, &mut rng);
        let spec = AnsatzSpec::new(4, 3);
        let params = ParamVector::random(spec.n_params(), rng.random());
        let eval = CostEvaluator::new(&problem, EvalBackend::exact()).unwrap();
        let grad = gradient(&eval, &spec, &params).unwrap();
        for (i, g) in grad.iter().enumerate() {
            let mut plus = params.to_vec();
            let mut minus = params.to_vec();
            plus[i] += h;
            minus[i] -= h;
            let fd =
                (cost_global(&eval, &spec, &plus).unwrap() - cost_global(&eval, &spec, &minus).unwrap()) / (2.0 * h);
            worst = worst.max((g - fd).abs());
        }
    }
    outcome(
        worst < 1e-6,
        format!("20 instances, 12 angles each, max |shift - fd| = {worst:.2e} (tol 1e-6)"),
    )
}

fn ac7_identity_convergence() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_fid: f64 = 1.0;
    let mut runs = 0;
    for n in 1..=3 {
        // d_min(3) = 2 leaves 6 angles for a 7-parameter real target
        let layers = d_min(n).max((1 << n) - 1);
        for seed in 0..10u64 {
            let b = generate_sle(n, 1.0, 0.0, seed).unwrap().b;
            let problem = SLEProblem::identity(n, b).unwrap();
            let reference = classical_solve(&problem.a, &problem.b).unwrap();
            for mode in [Mode::Asa, Mode::Ada] {
                let mut config = OptimizerConfig::new(mode, layers);
                config.seed = seed;
                let trace = run(&problem, &config, &EvalBackend::exact()).unwrap();
                runs += 1;
                let fid = fidelity(&solution_state(&trace, &problem).unwrap(), &reference).unwrap();
                worst_fid = worst_fid.min(fid);
                if !(trace.converged && trace.final_cost < 0.1 && fid >= 0.9) {
                    failures.push(format!("n={n} seed={seed} {mode:?}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{runs} runs (n<=3, random real b, 10 seeds, ASA and ADA at max(d_min, 2^n-1) layers), min fidelity {worst_fid:.4} (need >= 0.9), failures {failures:?}"),
    )
}

fn ac8_high_kappa_trend() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Family::KappaSweep);
    spec.qubits = vec![4];
    spec.kappas = vec![20.6519];
    spec.replicates = Some(60);
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    let key = &result.plan.groups[0];
    let pairs: Vec<_> = group_pairs(&result, key)
        .into_iter()
        .filter(|(a, s)| a.converged && s.converged)
        .collect();
    let (checked, bad) = batch_violations(&result, dir.path());
    let n = pairs.len();
    let mean = |f: fn(&(vqls::RunMetrics, vqls::RunMetrics)) -> u64| {
        pairs.iter().map(|p| f(p) as f64).sum::<f64>() / n.max(1) as f64
    };
    let (ada, asa) = (mean(|p| p.0.trc), mean(|p| p.1.trc));
    let wins = pairs.iter().filter(|(a, s)| a.trc < s.trc).count();
    let sp = result.records[result.plan.pairs[0].ada.unwrap()].config.sp;
    outcome(
        n >= 10 && ada < asa && bad.is_empty(),
        format!(
            "n=4 kappa=20.6519 exact, sp={sp:.3e}: {n}/60 pairs converged (need >= 10), mean TRC ADA {ada:.1} vs ASA {asa:.1}, \
             margin {:+.1}% (ADA cheaper if positive), ADA wins {wins}/{n}; {checked} traces checked, {} invariant violations",
            100.0 * (asa - ada) / asa.max(1.0),
            bad.len()
        ),
    )
}

fn ac9_noise_trend() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let kappas = [1.0, 7.9, 20.65];
    let mut spec = ExperimentSpec::new(Family::NoiseCompare);
    spec.qubits = vec![4];
    spec.kappas = kappas.to_vec();
    spec.replicates = Some(5);
    spec.max_iterations = 400;
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    let settings = BackendSettings::noisy();

    let mut cells = Vec::new();
    let mut fractions = Vec::new();
    let mut enough = true;
    for (key, &kappa) in result.plan.groups.iter().zip(&kappas) {
        let pairs = group_pairs(&result, key);
        let converged: Vec<_> = pairs.iter().filter(|(a, s)| a.converged && s.converged).collect();
        let wins = converged.iter().filter(|(a, s)| a.trc < s.trc).count();
        let all_wins = pairs.iter().filter(|(a, s)| a.trc < s.trc).count();
        enough &= converged.len() >= 5;
        let frac = (!converged.is_empty()).then(|| wins as f64 / converged.len() as f64);
        fractions.push(frac);

        // noisy cost at the exact optimum of each system
        let mut floors = Vec::new();
        for pair in result.plan.pairs.iter().filter(|p| &p.group_key == key) {
            let problem = generate_sle(4, kappa, 0.0, result.plan.problems[pair.problem].seed).unwrap();
            let mut config = OptimizerConfig::new(Mode::Asa, 4);
            config.seed = result.plan.problems[pair.problem].seed;
            let exact = run(&problem, &config, &EvalBackend::exact()).unwrap();
            if !exact.converged {
                continue;
            }
            let eval = CostEvaluator::new(&problem, settings.backend(config.seed))
                .unwrap()
                .with_estimator(ShotEstimator::PauliExpectation)
                .unwrap();
            let noisy: f64 = (0..3)
                .map(|k| eval.cost(&exact.ansatz, &exact.final_params, k).unwrap())
                .sum::<f64>()
                / 3.0;
            floors.push(noisy);
        }
        let floor = floors.iter().sum::<f64>() / floors.len().max(1) as f64;
        cells.push(format!(
            "kappa {kappa}: {}/{} converged pairs, ADA wins {} among converged, {all_wins}/{} over all pairs incl. unconverged, \
             noisy cost at exact optimum {floor:.3} ({} systems)",
            converged.len(),
            pairs.len(),
            frac.map_or("n/a".into(), |f| format!("{:.0}%", 100.0 * f)),
            pairs.len(),
            floors.len()
        ));
    }
    let monotone = enough
        && fractions
            .windows(2)
            .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b >= a));
    outcome(
        monotone,
        format!(
            "default noise, 1e4 shots, 400 iterations, d_t 0.1, need >= 5 converged pairs per cell and non-decreasing win fraction; {}",
            cells.join("; ")
        ),
    )
}

fn ac10_ada_invariants() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        1usize..=3,
        1.0f64..10.0,
        any::<u64>(),
        prop_oneof![Just(0.0), Just(1e-6), Just(1e-3), Just(0.05), Just(10.0)],
        1usize..=4,
        1usize..=150,
        prop_oneof![Just(0.05), Just(0.1), Just(0.3)],
        any::<bool>(),
    );
    let traces = std::cell::Cell::new(0usize);
    let property = runner.run(&strategy, |(n, kappa, seed, sp, cap, iters, dt, sampled)| {
        let problem = generate_sle(n, kappa, 0.0, seed).unwrap();
        for mode in [Mode::Ada, Mode::Asa] {
            let mut config = OptimizerConfig::new(mode, cap);
            config.seed = seed;
            config.sp = sp;
            config.max_iterations = iters;
            config.threshold = dt;
            let backend = if sampled {
                EvalBackend::shots(2000, seed)
            } else {
                EvalBackend::exact()
            };
            let trace = run(&problem, &config, &backend).unwrap();
            traces.set(traces.get() + 1);
            if let Some(v) = check_trace(&trace, &config) {
                return Err(TestCaseError::fail(format!(
                    "{mode:?} n={n} seed={seed} sp={sp} cap={cap} sampled={sampled}: {v}"
                )));
            }
        }
        Ok(())
    });

    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(Family::SpSweep);
    spec.qubits = vec![2];
    spec.replicates = Some(3);
    spec.max_iterations = 300;
    let result = run_experiment(&spec, dir.path(), None).unwrap();
    let (checked, bad) = batch_violations(&result, dir.path());
    let detail = format!(
        "{} property traces ({}), {checked} harness traces, {} violations {bad:?}",
        traces.get(),
        match &property {
            Ok(()) => "no counterexample".to_string(),
            Err(e) => format!("counterexample {e}"),
        },
        bad.len()
    );
    outcome(property.is_ok() && bad.is_empty(), detail)
}

fn ac11_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut spec = ExperimentSpec::new(Family::SpSweep);
    spec.qubits = vec![3];
    spec.replicates = Some(2);
    spec.max_iterations = 300;
    let ra = run_experiment(&spec, a.path(), Some(1)).unwrap();
    let rb = run_experiment(&spec, b.path(), None).unwrap();
    let mut names: Vec<String> = ra.report.files.keys().cloned().collect();
    names.push("manifest.json".into());
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .collect();
    let traces = names.iter().filter(|n| n.starts_with("traces/")).count();
    let same_set = ra.report.files.keys().eq(rb.report.files.keys());
    outcome(
        differing.is_empty() && same_set && traces == ra.records.len(),
        format!(
            "SP_SWEEP n=3 exact, 1 worker vs pool: {} files compared ({traces} traces), {} differ {differing:?}",
            names.len(),
            differing.len()
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion {
            id: 1,
            title: "TRC arithmetic",
            budget: Duration::from_millis(1),
            check: ac1_trc_arithmetic,
        },
        Criterion {
            id: 2,
            title: "SP formula",
            budget: Duration::from_millis(1),
            check: ac2_sp_formula,
        },
        Criterion {
            id: 3,
            title: "d_min",
            budget: Duration::from_millis(1),
            check: ac3_d_min,
        },
        Criterion {
            id: 4,
            title: "cost oracle",
            budget: Duration::from_secs(10),
            check: ac4_cost_oracle,
        },
        Criterion {
            id: 5,
            title: "shots vs exact",
            budget: minutes(5),
            check: ac5_shots_consistency,
        },
        Criterion {
            id: 6,
            title: "gradient check",
            budget: minutes(1),
            check: ac6_gradient_check,
        },
        Criterion {
            id: 7,
            title: "identity convergence",
            budget: minutes(1),
            check: ac7_identity_convergence,
        },
        Criterion {
            id: 8,
            title: "high-kappa TRC trend",
            budget: minutes(30),
            check: ac8_high_kappa_trend,
        },
        Criterion {
            id: 9,
            title: "noise trend",
            budget: minutes(120),
            check: ac9_noise_trend,
        },
        Criterion {
            id: 10,
            title: "ADA structural invariants",
            budget: minutes(10),
            check: ac10_ada_invariants,
        },
        Criterion {
            id: 11,
            title: "determinism",
            budget: minutes(10),
            check: ac11_determinism,
        },
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut results: BTreeMap<u32, bool> = BTreeMap::new();
    for cr in &criteria {
        let tag = format!("AC{}", cr.id);
        if !filters.is_empty() && !filters.iter().any(|f| f.eq_ignore_ascii_case(&tag)) {
            continue;
        }
        let start = Instant::now();
        let out = panic::catch_unwind(AssertUnwindSafe(cr.check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_budget = elapsed <= cr.budget;
        let pass = out.pass && in_budget;
        println!(
            "{tag} {} {}: {} [{:.3}s, budget {:.3}s{}]",
            if pass { "PASS" } else { "FAIL" },
            cr.title,
            out.detail,
            elapsed.as_secs_f64(),
            cr.budget.as_secs_f64(),
            if in_budget { "" } else { ", exceeded" }
        );
        results.insert(cr.id, pass);
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|(_, p)| !**p)
        .map(|(id, _)| format!("AC{id}"))
        .collect();
    println!(
        "acceptance: {} passed, {} failed {failed:?}",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
