//! Dense statevector simulation with ancilla-based estimation circuits.

mod backend;
mod circuits;
mod gate;
mod measure;
mod statevector;

pub use backend::{derive_seed, EvalBackend, EvalMode, DEFAULT_TRAJECTORIES};
pub use circuits::{
    ancilla_expectation, hadamard_test, hadamard_test_circuit, prepare_amplitude_state, state_prep_gate,
    state_prep_unitary, swap_test, swap_test_circuit, Part,
};
pub use gate::{Gate, GateKind};
pub use measure::measure_shots;
pub use statevector::Statevector;

/// Applies `gate` to a copy of `state`.
pub fn apply_gate(state: &Statevector, gate: &Gate) -> crate::Result<Statevector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}
