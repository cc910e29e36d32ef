//! Trajectory noise: depolarizing Pauli insertions after gates, amplitude
//! damping as a relaxation proxy, and classical readout flips.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VqlsError};
use crate::pauli::{Pauli, PauliString};
use crate::simulator::{Gate, GateKind, Statevector};

/// Per-gate error probabilities. All fields lie in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Depolarizing probability after a single-qubit gate.
    pub p1: f64,
    /// Depolarizing probability after a gate touching two or more qubits.
    pub p2: f64,
    /// Amplitude-damping strength applied to every touched qubit.
    pub p_decay: f64,
    /// Independent flip probability of each measured bit.
    pub p_readout: f64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, p_decay: f64, p_readout: f64) -> Result<NoiseModel> {
        let m = NoiseModel {
            p1,
            p2,
            p_decay,
            p_readout,
        };
        m.validate()?;
        Ok(m)
    }

    /// The profile used for the noisy benchmark family.
    pub fn default_profile() -> NoiseModel {
        NoiseModel {
            p1: 0.001,
            p2: 0.01,
            p_decay: 0.0005,
            p_readout: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p_decay", self.p_decay),
            ("p_readout", self.p_readout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} = {p} is not a probability"));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_decay == 0.0 && self.p_readout == 0.0
    }

    /// True when gates themselves are noisy (readout aside).
    pub fn has_gate_noise(&self) -> bool {
        self.p1 > 0.0 || self.p2 > 0.0 || self.p_decay > 0.0
    }

    pub fn from_json(s: &str) -> Result<NoiseModel> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        load_noise_model(&value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Probability with which a bit reading `1` with probability `p` is
    /// reported as `1` after the readout channel.
    pub fn readout_probability(&self, p: f64) -> f64 {
        p * (1.0 - self.p_readout) + (1.0 - p) * self.p_readout
    }
}

/// Builds a model from a JSON object; absent keys are zero.
pub fn load_noise_model(config: &serde_json::Value) -> Result<NoiseModel> {
    if !config.is_object() {
        return invalid("noise config must be a JSON object");
    }
    let model: NoiseModel =
        serde_json::from_value(config.clone()).map_err(|e| VqlsError::InvalidInput(format!("noise config: {e}")))?;
    model.validate()?;
    Ok(model)
}

/// Groups of qubits that receive one noise event after `gate`.
///
/// Pauli-string gates are charged per non-identity symbol (with the control,
/// if any); every other gate is one site spanning all its qubits.
pub fn noise_sites(gate: &Gate) -> Vec<Vec<usize>> {
    match &gate.kind {
        GateKind::Pauli(p) => p
            .ops()
            .iter()
            .zip(&gate.targets)
            .filter(|(op, _)| **op != Pauli::I)
            .map(|(_, &q)| gate.controls.iter().copied().chain([q]).collect())
            .collect(),
        _ => vec![gate.qubits().collect()],
    }
}

/// `(single-qubit, multi-qubit)` gate counts under the per-site charging rule.
pub fn charge_gate_count(circuit: &[Gate]) -> (usize, usize) {
    circuit.iter().flat_map(noise_sites).fold(
        (0, 0),
        |(n1, n2), site| {
            if site.len() == 1 {
                (n1 + 1, n2)
            } else {
                (n1, n2 + 1)
            }
        },
    )
}

/// One stochastic noise event on `targets`: a uniformly drawn non-identity
/// Pauli with probability `p1`/`p2`, then amplitude damping per qubit.
pub fn apply_gate_noise<R: Rng + ?Sized>(state: &mut Statevector, targets: &[usize], model: &NoiseModel, rng: &mut R) {
    let p = if targets.len() == 1 { model.p1 } else { model.p2 };
    if p > 0.0 && rng.random::<f64>() < p {
        let k = targets.len() as u32;
        let mut code = rng.random_range(1..4usize.pow(k));
        let mut ops = vec![Pauli::I; targets.len()];
        for op in ops.iter_mut().rev() {
            *op = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][code % 4];
            code /= 4;
        }
        let gate = Gate::pauli_on(PauliString::from_ops(ops), targets.to_vec());
        state.apply_unchecked(&gate);
    }
    if model.p_decay > 0.0 {
        for &q in targets {
            amplitude_damp(state, q, model.p_decay, rng.random::<f64>());
        }
    }
}

/// Quantum-jump unravelling of amplitude damping with strength `gamma`;
/// `u` is a uniform draw selecting the branch.
fn amplitude_damp(state: &mut Statevector, q: usize, gamma: f64, u: f64) {
    let p_one = state.probability_one(q);
    let bit = state.bit(q);
    let amps = state.amplitudes_mut();
    let jump = gamma * p_one;
    if u < jump {
        for i in 0..amps.len() {
            if i & bit == 0 {
                amps[i] = amps[i | bit];
                amps[i | bit] = Complex64::default();
            }
        }
        state.scale(1.0 / p_one.sqrt());
    } else {
        let keep = (1.0 - gamma).sqrt();
        for (i, a) in amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= keep;
            }
        }
        let norm = state.norm();
        if norm > 0.0 {
            state.scale(1.0 / norm);
        }
    }
}

/// Applies `circuit` with a noise event after every gate.
pub fn run_noisy<R: Rng + ?Sized>(
    state: &mut Statevector,
    circuit: &[Gate],
    model: &NoiseModel,
    rng: &mut R,
) -> Result<()> {
    for gate in circuit {
        state.apply(gate)?;
        for site in noise_sites(gate) {
            apply_gate_noise(state, &site, model, rng);
        }
    }
    Ok(())
}
