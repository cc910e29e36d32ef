//! Experiment specifications and their expansion into runs.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vqls::engine::{choose_sp, Mode, OptimizerConfig, ShotEstimator};
use vqls::problems::MAX_QUBITS;
use vqls::simulator::{derive_seed, EvalBackend, EvalMode, DEFAULT_TRAJECTORIES};
use vqls::{d_min, NoiseModel};

use crate::error::{spec_error, BenchError, Result};

/// Condition-number grid of the 5-qubit condition sweep.
pub const KAPPA_GRID: [f64; 5] = [1.0, 3.684, 7.899, 13.572, 20.651];
/// Condition-number grid of the noisy comparison.
pub const NOISE_KAPPA_GRID: [f64; 4] = [1.0, 3.684, 7.8995, 20.6519];
pub const SPARSITY_GRID: [f64; 4] = [0.9375, 0.875, 0.8125, 0.75];
pub const SP_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-5];
pub const DEFAULT_REPLICATES: usize = 5;
pub const DEFAULT_SHOTS: u64 = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    QubitSweep,
    KappaSweep,
    SparsitySweep,
    NoiseCompare,
    SpSweep,
    #[default]
    Single,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::QubitSweep,
        Family::KappaSweep,
        Family::SparsitySweep,
        Family::NoiseCompare,
        Family::SpSweep,
        Family::Single,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::QubitSweep => "QUBIT_SWEEP",
            Family::KappaSweep => "KAPPA_SWEEP",
            Family::SparsitySweep => "SPARSITY_SWEEP",
            Family::NoiseCompare => "NOISE_COMPARE",
            Family::SpSweep => "SP_SWEEP",
            Family::Single => "SINGLE",
        }
    }

    /// Families whose condition numbers vary across replicates rather than
    /// forming cells of their own.
    fn cycles_kappa(self) -> bool {
        matches!(self, Family::QubitSweep | Family::SpSweep)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Family> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == norm)
            .ok_or_else(|| BenchError::Spec(format!("unknown experiment family {s:?}")))
    }
}

/// Circuit-evaluation settings shared by every run of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub mode: EvalMode,
    pub shots: u64,
    pub noise: Option<NoiseModel>,
    pub trajectories: usize,
    pub estimator: ShotEstimator,
}

impl Default for BackendSettings {
    fn default() -> Self {
        BackendSettings {
            mode: EvalMode::Exact,
            shots: DEFAULT_SHOTS,
            noise: None,
            trajectories: DEFAULT_TRAJECTORIES,
            estimator: ShotEstimator::default(),
        }
    }
}

impl BackendSettings {
    /// Sampled evaluation under the default noise profile. Pauli-expectation
    /// assembly needs far fewer noisy circuits than swap tests.
    pub fn noisy() -> BackendSettings {
        BackendSettings {
            mode: EvalMode::Shots,
            noise: Some(NoiseModel::default_profile()),
            estimator: ShotEstimator::PauliExpectation,
            ..BackendSettings::default()
        }
    }

    pub fn backend(&self, seed: u64) -> EvalBackend {
        let mut b = match self.mode {
            EvalMode::Exact => EvalBackend::exact(),
            EvalMode::Shots => EvalBackend::shots(self.shots, seed),
        };
        if let Some(noise) = self.noise {
            b = b.with_noise(noise);
        }
        b.with_trajectories(self.trajectories)
    }
}

/// One experiment: a family plus grids. Empty grids and `None` fields take
/// the family defaults; [`ExperimentSpec::resolved`] makes them explicit.
///
/// In QUBIT_SWEEP and SP_SWEEP the condition numbers are assigned to
/// replicates in turn; in the other families every `(κ, sparsity)` value is
/// its own cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: Family,
    pub seed: u64,
    pub replicates: Option<usize>,
    pub qubits: Vec<usize>,
    pub kappas: Vec<f64>,
    pub sparsities: Vec<f64>,
    /// ADA switching parameters. Outside SP_SWEEP at most one is used.
    pub sps: Vec<f64>,
    /// ASA layer count; `d_min(n)` when unset.
    pub layers: Option<usize>,
    /// ADA layer cap; `d_min(n)` when unset.
    pub layer_cap: Option<usize>,
    pub modes: Vec<Mode>,
    /// SINGLE only: solve `A = I`.
    pub identity: bool,
    /// SINGLE only: load the problem instead of generating it.
    pub problem_file: Option<PathBuf>,
    pub step_size: f64,
    pub threshold: f64,
    pub max_iterations: usize,
    pub backend: Option<BackendSettings>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            family: Family::Single,
            seed: 0,
            replicates: None,
            qubits: Vec::new(),
            kappas: Vec::new(),
            sparsities: Vec::new(),
            sps: Vec::new(),
            layers: None,
            layer_cap: None,
            modes: Vec::new(),
            identity: false,
            problem_file: None,
            step_size: 0.05,
            threshold: 0.1,
            max_iterations: 6400,
            backend: None,
        }
    }
}

impl ExperimentSpec {
    pub fn new(family: Family) -> ExperimentSpec {
        ExperimentSpec {
            family,
            ..ExperimentSpec::default()
        }
    }

    pub fn from_json(s: &str) -> Result<ExperimentSpec> {
        serde_json::from_str(s).map_err(|e| BenchError::Spec(e.to_string()))
    }

    /// Copy with every family default filled in.
    pub fn resolved(&self) -> ExperimentSpec {
        let mut s = self.clone();
        let f = s.family;
        s.replicates
            .get_or_insert(if f == Family::Single { 1 } else { DEFAULT_REPLICATES });
        if s.qubits.is_empty() {
            s.qubits = match f {
                Family::QubitSweep => vec![4, 5, 6],
                Family::KappaSweep => vec![5],
                Family::Single => vec![2],
                _ => vec![4],
            };
        }
        if s.kappas.is_empty() {
            s.kappas = match f {
                Family::QubitSweep | Family::KappaSweep | Family::SpSweep => KAPPA_GRID.to_vec(),
                Family::NoiseCompare => NOISE_KAPPA_GRID.to_vec(),
                Family::SparsitySweep => vec![1.5],
                Family::Single => vec![1.0],
            };
        }
        if s.sparsities.is_empty() {
            s.sparsities = match f {
                Family::SparsitySweep => SPARSITY_GRID.to_vec(),
                _ => vec![0.0],
            };
        }
        if s.sps.is_empty() {
            s.sps = match f {
                Family::SpSweep => SP_GRID.to_vec(),
                _ => vec![choose_sp(s.threshold, s.max_iterations.max(1))],
            };
        }
        if s.modes.is_empty() {
            s.modes = vec![Mode::Ada, Mode::Asa];
        }
        if s.backend.is_none() {
            s.backend = Some(match f {
                Family::NoiseCompare => BackendSettings::noisy(),
                _ => BackendSettings::default(),
            });
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.resolved();
        if s.replicates == Some(0) {
            return spec_error("replicates must be positive");
        }
        if let Some(&n) = s.qubits.iter().find(|&&n| n == 0 || n > MAX_QUBITS) {
            return spec_error(format!("qubit count {n} outside 1..={MAX_QUBITS}"));
        }
        if let Some(k) = s.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
            return spec_error(format!("condition number {k} must be finite and >= 1"));
        }
        if let Some(x) = s.sparsities.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return spec_error(format!("sparsity {x} outside [0, 1)"));
        }
        if let Some(sp) = s.sps.iter().find(|sp| !(**sp >= 0.0 && sp.is_finite())) {
            return spec_error(format!("switching parameter {sp} must be finite and >= 0"));
        }
        if s.family != Family::SpSweep && s.sps.len() > 1 {
            return spec_error(format!("{} takes one switching parameter", s.family));
        }
        if s.family != Family::Single {
            if s.identity || s.problem_file.is_some() {
                return spec_error("identity and problem_file apply to SINGLE only");
            }
            if s.modes.len() != 2 || !s.modes.contains(&Mode::Ada) || !s.modes.contains(&Mode::Asa) {
                return spec_error(format!("{} runs both modes", s.family));
            }
        }
        if matches!(s.layers, Some(0)) || matches!(s.layer_cap, Some(0)) {
            return spec_error("layer counts must be positive");
        }
        let mut probe = OptimizerConfig::new(Mode::Ada, 1);
        probe.step_size = s.step_size;
        probe.threshold = s.threshold;
        probe.max_iterations = s.max_iterations;
        probe.validate().map_err(|e| BenchError::Spec(e.to_string()))?;
        s.backend
            .as_ref()
            .expect("resolved")
            .backend(0)
            .validate()
            .map_err(|e| BenchError::Spec(e.to_string()))?;
        Ok(())
    }

    /// Expands the resolved spec into problems, jobs and ADA/ASA pairs.
    pub fn plan(&self) -> Result<Plan> {
        self.validate()?;
        let s = self.resolved();
        let replicates = s.replicates.expect("resolved");
        let settings = s.backend.clone().expect("resolved");
        let mut plan = Plan::default();
        let mut problem_index: HashMap<String, usize> = HashMap::new();
        let mut job_index: HashMap<(usize, String), usize> = HashMap::new();

        for cell in s.cells() {
            plan.groups.push(cell.key.clone());
            for r in 0..replicates {
                let seed = derive_seed(s.seed, &[r as u64]);
                let kappa = cell.kappa.unwrap_or(s.kappas[r % s.kappas.len()]);
                let source = if let Some(path) = &s.problem_file {
                    ProblemSource::File(path.clone())
                } else if s.identity {
                    ProblemSource::Identity {
                        n_qubits: cell.n_qubits,
                    }
                } else {
                    ProblemSource::Generated {
                        n_qubits: cell.n_qubits,
                        kappa,
                        sparsity: cell.sparsity,
                    }
                };
                let id = source.id(r);
                let problem = *problem_index.entry(id.clone()).or_insert_with(|| {
                    plan.problems.push(ProblemPlan { id, source, seed });
                    plan.problems.len() - 1
                });

                let mut pair = PairPlan {
                    group_key: cell.key.clone(),
                    replicate: r,
                    problem,
                    ada: None,
                    asa: None,
                };
                for &mode in &s.modes {
                    let d = d_min(cell.n_qubits);
                    let mut config = OptimizerConfig::new(
                        mode,
                        match mode {
                            Mode::Asa => s.layers.unwrap_or(d),
                            Mode::Ada => s.layer_cap.unwrap_or(d),
                        },
                    );
                    config.step_size = s.step_size;
                    config.threshold = s.threshold;
                    config.max_iterations = s.max_iterations;
                    config.sp = if mode == Mode::Ada { cell.sp } else { 0.0 };
                    config.seed = seed;
                    config.estimator = settings.estimator;
                    let job = JobPlan {
                        problem,
                        config,
                        backend: settings.backend(derive_seed(seed, &[1])),
                    };
                    let key = (problem, job.key());
                    let idx = *job_index.entry(key).or_insert_with(|| {
                        plan.jobs.push(job);
                        plan.jobs.len() - 1
                    });
                    match mode {
                        Mode::Ada => pair.ada = Some(idx),
                        Mode::Asa => pair.asa = Some(idx),
                    }
                }
                plan.pairs.push(pair);
            }
        }
        Ok(plan)
    }

    fn cells(&self) -> Vec<Cell> {
        let n0 = self.qubits[0];
        let s0 = self.sparsities[0];
        let sp0 = self.sps[0];
        let fixed_kappa = (!self.family.cycles_kappa()).then_some(self.kappas[0]);
        match self.family {
            Family::QubitSweep => self
                .qubits
                .iter()
                .map(|&n| Cell::new(format!("n={n}"), n, None, s0, sp0))
                .collect(),
            Family::KappaSweep | Family::NoiseCompare => self
                .kappas
                .iter()
                .map(|&k| Cell::new(format!("kappa={k}"), n0, Some(k), s0, sp0))
                .collect(),
            Family::SparsitySweep => self
                .sparsities
                .iter()
                .map(|&x| Cell::new(format!("sparsity={x}"), n0, fixed_kappa, x, sp0))
                .collect(),
            Family::SpSweep => self
                .sps
                .iter()
                .map(|&sp| Cell::new(format!("sp={sp}"), n0, None, s0, sp))
                .collect(),
            Family::Single => vec![Cell::new("single".into(), n0, fixed_kappa, s0, sp0)],
        }
    }
}

struct Cell {
    key: String,
    n_qubits: usize,
    /// `None` cycles through the spec's condition numbers.
    kappa: Option<f64>,
    sparsity: f64,
    sp: f64,
}

impl Cell {
    fn new(key: String, n_qubits: usize, kappa: Option<f64>, sparsity: f64, sp: f64) -> Cell {
        Cell {
            key,
            n_qubits,
            kappa,
            sparsity,
            sp,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSource {
    Generated { n_qubits: usize, kappa: f64, sparsity: f64 },
    Identity { n_qubits: usize },
    File(PathBuf),
}

impl ProblemSource {
    fn id(&self, replicate: usize) -> String {
        match self {
            ProblemSource::Generated {
                n_qubits,
                kappa,
                sparsity,
            } => format!("n{n_qubits}_k{kappa}_s{sparsity}_r{replicate}"),
            ProblemSource::Identity { n_qubits } => format!("n{n_qubits}_identity_r{replicate}"),
            ProblemSource::File(path) => {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
                format!("{stem}_r{replicate}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemPlan {
    /// File stem under `problems/`.
    pub id: String,
    pub source: ProblemSource,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobPlan {
    pub problem: usize,
    pub config: OptimizerConfig,
    pub backend: EvalBackend,
}

impl JobPlan {
    fn key(&self) -> String {
        serde_json::to_string(&(&self.config, &self.backend)).expect("configs serialize")
    }
}

/// One ADA/ASA comparison on one problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPlan {
    pub group_key: String,
    pub replicate: usize,
    pub problem: usize,
    pub ada: Option<usize>,
    pub asa: Option<usize>,
}

/// Expanded experiment. Jobs shared by several pairs (the ASA baseline of a
/// switching-parameter sweep) appear once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    pub problems: Vec<ProblemPlan>,
    pub jobs: Vec<JobPlan>,
    pub pairs: Vec<PairPlan>,
    /// Group keys in grid order.
    pub groups: Vec<String>,
}
