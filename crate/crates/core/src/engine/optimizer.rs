use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cost::{CostEvaluator, CostParts, ShotEstimator};
use super::trace::{RunTrace, TraceRecord};
use crate::ansatz::{ansatz_state, append_layer, AnsatzSpec, Axis, Entangler, ParamVector};
use crate::error::{invalid, Result};
use crate::problems::SLEProblem;
use crate::simulator::EvalBackend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fixed layer count.
    Asa,
    /// Layers appended while the cost plateaus.
    Ada,
}

/// How the shifted evaluations are turned into a gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftRule {
    /// Shift rule on numerator and denominator separately, combined with the
    /// quotient rule. Exact for the ratio.
    #[default]
    Quotient,
    /// `[C(θ + π/2) − C(θ − π/2)] / 2` on the cost itself.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub step_size: f64,
    /// Convergence threshold `d_t` on the cost.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Switching parameter (ADA only).
    pub sp: f64,
    pub layer_cap: usize,
    pub mode: Mode,
    /// Seed of the initial angles.
    pub seed: u64,
    pub axis: Axis,
    pub entangler: Entangler,
    pub shift_rule: ShiftRule,
    pub estimator: ShotEstimator,
}

impl OptimizerConfig {
    pub fn new(mode: Mode, layer_cap: usize) -> OptimizerConfig {
        OptimizerConfig {
            step_size: 0.05,
            threshold: 0.1,
            max_iterations: 6400,
            sp: choose_sp(0.1, 6400),
            layer_cap,
            mode,
            seed: 0,
            axis: Axis::default(),
            entangler: Entangler::default(),
            shift_rule: ShiftRule::default(),
            estimator: ShotEstimator::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return invalid(format!("step size {} must be positive", self.step_size));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return invalid(format!("threshold {} outside (0, 1]", self.threshold));
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations must be positive");
        }
        if self.sp.is_nan() || self.sp < 0.0 {
            return invalid(format!("switching parameter {} must be non-negative", self.sp));
        }
        if self.layer_cap == 0 {
            return invalid("layer cap must be positive");
        }
        Ok(())
    }
}

/// Switching parameter that spreads the cost drop `1 − d_t` over `n_iterd` steps.
pub fn choose_sp(threshold: f64, n_iterd: usize) -> f64 {
    (1.0 - threshold) / n_iterd as f64
}

/// Cost threshold guaranteeing solution error `ε` at condition number `κ`.
pub fn threshold_for_precision(epsilon: f64, kappa: f64) -> f64 {
    epsilon * epsilon / (kappa * kappa)
}

/// `θ − δ·∇C`.
pub fn gd_step(params: &[f64], grad: &[f64], step: f64) -> ParamVector {
    assert_eq!(params.len(), grad.len(), "gradient length mismatch");
    params
        .iter()
        .zip(grad)
        .map(|(t, g)| t - step * g)
        .collect::<Vec<_>>()
        .into()
}

fn nonce(t: usize, j: usize) -> u64 {
    ((t as u64) << 32) | j as u64
}

/// Parameter-shift gradient at `params`, using `2k` shifted evaluations.
///
/// `center` holds the unshifted parts when already known (the quotient rule
/// needs them); otherwise one more evaluation is made.
pub fn gradient_with(
    evaluator: &CostEvaluator<'_>,
    spec: &AnsatzSpec,
    params: &[f64],
    rule: ShiftRule,
    center: Option<CostParts>,
    iteration: usize,
) -> Result<Vec<f64>> {
    let center = match (rule, center) {
        (ShiftRule::Quotient, None) => Some(evaluator.parts(spec, params, nonce(iteration, 0))?),
        (_, c) => c,
    };
    let mut shifted = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        shifted[i] = params[i] + FRAC_PI_2;
        let plus = evaluator.parts(spec, &shifted, nonce(iteration, 2 * i + 1))?;
        shifted[i] = params[i] - FRAC_PI_2;
        let minus = evaluator.parts(spec, &shifted, nonce(iteration, 2 * i + 2))?;
        shifted[i] = params[i];
        grad.push(match rule {
            ShiftRule::Direct => (plus.cost()? - minus.cost()?) / 2.0,
            ShiftRule::Quotient => {
                let c = center.expect("center evaluated above");
                c.cost()?;
                let dn = (plus.numerator - minus.numerator) / 2.0;
                let dd = (plus.denominator - minus.denominator) / 2.0;
                -(dn * c.denominator - c.numerator * dd) / (c.denominator * c.denominator)
            }
        });
    }
    Ok(grad)
}

/// Exact gradient of `C_G` by the quotient-form shift rule.
pub fn gradient(evaluator: &CostEvaluator<'_>, spec: &AnsatzSpec, params: &[f64]) -> Result<Vec<f64>> {
    gradient_with(evaluator, spec, params, ShiftRule::Quotient, None, 0)
}

/// Static-ansatz run with `config.layer_cap` layers.
pub fn run_asa(problem: &SLEProblem, config: &OptimizerConfig, backend: &EvalBackend) -> Result<RunTrace> {
    run(
        problem,
        &OptimizerConfig {
            mode: Mode::Asa,
            ..config.clone()
        },
        backend,
    )
}

/// Dynamic-ansatz run starting from one layer.
pub fn run_ada(problem: &SLEProblem, config: &OptimizerConfig, backend: &EvalBackend) -> Result<RunTrace> {
    run(
        problem,
        &OptimizerConfig {
            mode: Mode::Ada,
            ..config.clone()
        },
        backend,
    )
}

/// Gradient descent from seeded uniform angles until `C < d_t` or the
/// iteration budget runs out. In ADA mode a zero-angle layer is appended after
/// an update whenever the last two costs since the previous append differ by
/// less than `sp`.
pub fn run(problem: &SLEProblem, config: &OptimizerConfig, backend: &EvalBackend) -> Result<RunTrace> {
    config.validate()?;
    let evaluator = CostEvaluator::new(problem, backend.clone())?.with_estimator(config.estimator)?;
    let n = problem.n_qubits;
    let start_layers = match config.mode {
        Mode::Asa => config.layer_cap,
        Mode::Ada => 1,
    };
    let mut spec = AnsatzSpec::new(n, start_layers)
        .with_axis(config.axis)
        .with_entangler(config.entangler);
    let mut params = ParamVector::random(spec.n_params(), config.seed);

    let mut records = Vec::new();
    let mut loop_seconds = Vec::new();
    let mut evaluations = 0u64;
    let mut since_append: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut final_cost = f64::NAN;
    let mut final_spec = spec;
    let mut final_params = params.clone();

    for t in 0..config.max_iterations {
        let started = Instant::now();
        let parts = evaluator.parts(&spec, &params, nonce(t, 0))?;
        let cost = parts.cost()?;
        evaluations += 1;
        records.push(TraceRecord {
            t,
            cost,
            layers: spec.n_layers,
            params: spec.n_params(),
        });
        final_cost = cost;
        final_spec = spec;
        final_params = params.clone();
        if cost < config.threshold {
            converged = true;
            loop_seconds.push(started.elapsed().as_secs_f64());
            break;
        }
        if t + 1 == config.max_iterations {
            loop_seconds.push(started.elapsed().as_secs_f64());
            break;
        }
        let grad = gradient_with(&evaluator, &spec, &params, config.shift_rule, Some(parts), t)?;
        evaluations += 2 * params.len() as u64;
        params = gd_step(&params, &grad, config.step_size);

        if config.mode == Mode::Ada {
            since_append.push(cost);
            if let [.., prev, last] = since_append[..] {
                if (prev - last).abs() < config.sp && spec.n_layers < config.layer_cap {
                    (spec, params) = append_layer(&spec, &params, config.layer_cap)?;
                    since_append.clear();
                }
            }
        }
        loop_seconds.push(started.elapsed().as_secs_f64());
    }

    Ok(RunTrace {
        mode: config.mode,
        records,
        converged,
        final_cost,
        ansatz: final_spec,
        final_params,
        layer_cap: config.layer_cap,
        threshold: config.threshold,
        cost_evaluations: evaluations,
        loop_seconds,
    })
}

/// Normalized trial solution `V(θ*)|0⟩` of a finished run.
pub fn solution_state(trace: &RunTrace, problem: &SLEProblem) -> Result<Vec<Complex64>> {
    if trace.ansatz.n_qubits != problem.n_qubits {
        return invalid("trace and problem have different qubit counts");
    }
    Ok(ansatz_state(&trace.ansatz, &trace.final_params)?.into_amplitudes())
}
