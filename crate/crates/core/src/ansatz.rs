//! Hardware-efficient layered ansatz: per layer, one rotation on every qubit
//! followed by a sublayer of CZ entanglers.

use std::f64::consts::TAU;
use std::ops::{Deref, DerefMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VqlsError};
use crate::simulator::{Gate, Statevector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    #[default]
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Entangler {
    /// CZ on (0,1), (1,2), … in every layer.
    CzLinear,
    /// CZ on (0,1), (2,3), … in even layers and (1,2), (3,4), … in odd ones.
    #[default]
    CzAlternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    #[serde(rename = "n")]
    pub n_qubits: usize,
    #[serde(rename = "d")]
    pub n_layers: usize,
    #[serde(default)]
    pub axis: Axis,
    #[serde(default)]
    pub entangler: Entangler,
}

impl AnsatzSpec {
    /// Y rotations with alternating CZ pairs.
    pub fn new(n_qubits: usize, n_layers: usize) -> AnsatzSpec {
        AnsatzSpec {
            n_qubits,
            n_layers,
            axis: Axis::default(),
            entangler: Entangler::default(),
        }
    }

    pub fn with_axis(mut self, axis: Axis) -> AnsatzSpec {
        self.axis = axis;
        self
    }

    pub fn with_entangler(mut self, entangler: Entangler) -> AnsatzSpec {
        self.entangler = entangler;
        self
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * self.n_layers
    }

    /// CZ pairs of layer `layer`.
    pub fn entangler_pairs(&self, layer: usize) -> Vec<(usize, usize)> {
        let start = match self.entangler {
            Entangler::CzLinear => return (0..self.n_qubits.saturating_sub(1)).map(|q| (q, q + 1)).collect(),
            Entangler::CzAlternating => layer % 2,
        };
        (start..self.n_qubits.saturating_sub(1))
            .step_by(2)
            .map(|q| (q, q + 1))
            .collect()
    }

    /// Number of gates in the circuit.
    pub fn gate_count(&self) -> usize {
        (0..self.n_layers)
            .map(|l| self.n_qubits + self.entangler_pairs(l).len())
            .sum()
    }

    /// Whether every gate generator is real, so `V(θ)|0⟩` has real amplitudes.
    pub fn is_real(&self) -> bool {
        self.axis == Axis::Y
    }
}

/// Rotation angles `θ`, consumed layer by layer in qubit order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(angles: Vec<f64>) -> ParamVector {
        ParamVector(angles)
    }

    pub fn zeros(len: usize) -> ParamVector {
        ParamVector(vec![0.0; len])
    }

    /// `len` angles drawn uniformly from `[0, 2π)`. The first `k` angles do not
    /// depend on `len`.
    pub fn random(len: usize, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ParamVector((0..len).map(|_| rng.random_range(0.0..TAU)).collect())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// Gate sequence of `V(θ)`.
pub fn build_circuit(spec: &AnsatzSpec, params: &[f64]) -> Result<Vec<Gate>> {
    if params.len() != spec.n_params() {
        return invalid(format!(
            "ansatz with {} qubits and {} layers takes {} angles, got {}",
            spec.n_qubits,
            spec.n_layers,
            spec.n_params(),
            params.len()
        ));
    }
    let rot = match spec.axis {
        Axis::X => Gate::rx,
        Axis::Y => Gate::ry,
        Axis::Z => Gate::rz,
    };
    let mut gates = Vec::with_capacity(spec.gate_count());
    for (layer, angles) in params.chunks(spec.n_qubits.max(1)).enumerate().take(spec.n_layers) {
        gates.extend(angles.iter().enumerate().map(|(q, &t)| rot(q, t)));
        gates.extend(spec.entangler_pairs(layer).into_iter().map(|(a, b)| Gate::cz(a, b)));
    }
    Ok(gates)
}

/// `V(θ)|0⟩`.
pub fn ansatz_state(spec: &AnsatzSpec, params: &[f64]) -> Result<Statevector> {
    let mut s = Statevector::zero(spec.n_qubits);
    for g in build_circuit(spec, params)? {
        s.apply_unchecked(&g);
    }
    Ok(s)
}

/// Default static layer count `⌊2^n / n⌋`, at least 1.
pub fn d_min(n: usize) -> usize {
    assert!(n >= 1, "d_min needs at least one qubit");
    ((1usize << n) / n).max(1)
}

/// Adds one layer with zero angles, or fails once `cap` layers exist.
pub fn append_layer(spec: &AnsatzSpec, params: &ParamVector, cap: usize) -> Result<(AnsatzSpec, ParamVector)> {
    if spec.n_layers >= cap {
        return Err(VqlsError::CapExceeded { cap });
    }
    if params.len() != spec.n_params() {
        return invalid("parameter count does not match the ansatz");
    }
    let mut grown = params.0.clone();
    grown.resize(params.len() + spec.n_qubits, 0.0);
    Ok((
        AnsatzSpec {
            n_layers: spec.n_layers + 1,
            ..*spec
        },
        ParamVector(grown),
    ))
}
