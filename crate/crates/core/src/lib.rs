//! Variational quantum linear solver.
//!
//! Solves `A x = b` by minimizing the global cost
//! `C_G = 1 − |⟨b|ψ⟩|² / ⟨ψ|ψ⟩` with `|ψ⟩ = A V(θ)|0⟩` over a layered
//! hardware-efficient ansatz `V(θ)`. The static variant fixes the layer count;
//! the dynamic variant starts from one layer and appends layers whenever the
//! cost stalls.
//!
//! Circuits run on the built-in statevector simulator, either exactly or by
//! finite-shot sampling with optional trajectory noise. Qubit 0 is the most
//! significant bit of a basis index throughout.

pub mod ansatz;
pub mod engine;
mod error;
pub mod metrics;
pub mod noise;
pub mod pauli;
pub mod problems;
pub mod simulator;

pub use ansatz::{append_layer, build_circuit, d_min, AnsatzSpec, Axis, Entangler, ParamVector};
pub use engine::{
    choose_sp, cost_global, gradient, run, run_ada, run_asa, solution_state, CostEvaluator, Mode, OptimizerConfig,
    RunTrace, ShiftRule, ShotEstimator, TraceRecord,
};
pub use error::{Result, VqlsError};
pub use metrics::{artrc_deviation, run_metrics, summarize_batch, trc, RunMetrics, SummaryRow};
pub use noise::NoiseModel;
pub use pauli::{decompose, reconstruct, PauliDecomposition, PauliString};
pub use problems::{classical_solve, condition_number, fidelity, generate_sle, SLEProblem};
pub use simulator::{EvalBackend, EvalMode, Gate, Statevector};
