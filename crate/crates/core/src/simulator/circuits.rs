use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backend::{derive_seed, EvalBackend};
use super::measure::binomial;
use super::{Gate, Statevector};
use crate::error::{invalid, Result};
use crate::noise::run_noisy;

/// Which component of `⟨φ|W|φ⟩` a Hadamard test reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

/// `b / ‖b‖` as a statevector.
pub fn prepare_amplitude_state(b: &[Complex64]) -> Result<Statevector> {
    Statevector::from_amplitudes(b.to_vec())
}

/// A unitary whose first column is `b / ‖b‖`, completed by Gram–Schmidt
/// against the computational basis.
pub fn state_prep_unitary(b: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let first = prepare_amplitude_state(b)?;
    let dim = first.dim();
    let mut cols: Vec<DVector<Complex64>> = vec![DVector::from_column_slice(first.amplitudes())];
    for k in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut w = DVector::from_fn(dim, |r, _| {
            if r == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        // two passes keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm > 1e-6 {
            cols.push(w / Complex64::new(norm, 0.0));
        }
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Single oracle gate on qubits `0..n` mapping `|0⟩` to `b / ‖b‖`.
pub fn state_prep_gate(b: &[Complex64]) -> Result<Gate> {
    let u = state_prep_unitary(b)?;
    let n = b.len().trailing_zeros() as usize;
    Ok(Gate::unitary(u, (0..n).collect()))
}

/// Expectation of `Z` on `ancilla` after running `circuit` on `|0…0⟩`, i.e.
/// `P(0) − P(1)`.
///
/// EXACT mode reads the probability off the final state. SHOTS mode draws a
/// binomial sample of the ancilla only; with gate noise the shots are spread
/// over independent noise trajectories and readout flips are folded into the
/// outcome probability.
pub fn ancilla_expectation(n_total: usize, circuit: &[Gate], ancilla: usize, backend: &EvalBackend) -> Result<f64> {
    if ancilla >= n_total {
        return invalid(format!("ancilla {ancilla} outside a {n_total}-qubit register"));
    }
    let clean_p1 = || -> Result<f64> {
        let mut s = Statevector::zero(n_total);
        s.apply_circuit(circuit)?;
        Ok(s.probability_one(ancilla))
    };
    if backend.is_exact() {
        return Ok(1.0 - 2.0 * clean_p1()?);
    }
    backend.validate()?;
    let noise = backend.active_noise();
    let trajectories = match noise {
        Some(m) if m.has_gate_noise() => backend.trajectories.min(backend.shots as usize),
        _ => 1,
    };
    let mut p1 = Vec::with_capacity(trajectories);
    if trajectories == 1 && noise.is_none_or(|m| !m.has_gate_noise()) {
        p1.push(clean_p1()?);
    } else {
        let model = noise.expect("gate noise implies a model");
        for t in 0..trajectories {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(backend.seed, &[1, t as u64]));
            let mut s = Statevector::zero(n_total);
            run_noisy(&mut s, circuit, model, &mut rng)?;
            p1.push(s.probability_one(ancilla));
        }
    }
    if let Some(m) = noise {
        for p in &mut p1 {
            *p = m.readout_probability(*p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(backend.seed, &[0]));
    let shots = backend.shots;
    let per = shots / trajectories as u64;
    let extra = shots % trajectories as u64;
    let ones: u64 = p1
        .iter()
        .enumerate()
        .map(|(t, &p)| binomial(&mut rng, per + u64::from((t as u64) < extra), p))
        .sum();
    Ok((shots as f64 - 2.0 * ones as f64) / shots as f64)
}

/// Gate list of the Hadamard test on `n` system qubits plus ancilla `n`.
pub fn hadamard_test_circuit(n: usize, state_prep: &[Gate], w: &[Gate], part: Part) -> Vec<Gate> {
    let mut circuit = state_prep.to_vec();
    circuit.push(Gate::h(n));
    if part == Part::Imag {
        circuit.push(Gate::sdg(n));
    }
    circuit.extend(w.iter().map(|g| g.clone().controlled_by(n)));
    circuit.push(Gate::h(n));
    circuit
}

/// Estimates `Re` or `Im` of `⟨φ|W|φ⟩` with `|φ⟩ = state_prep|0⟩`.
///
/// `w` acts on the `n` system qubits; each of its gates is conditioned on the
/// ancilla (qubit `n`) here.
pub fn hadamard_test(n: usize, state_prep: &[Gate], w: &[Gate], part: Part, backend: &EvalBackend) -> Result<f64> {
    let circuit = hadamard_test_circuit(n, state_prep, w, part);
    ancilla_expectation(n + 1, &circuit, n, backend)
}

/// Gate list of the swap test: registers `0..n` and `n..2n`, ancilla `2n`.
pub fn swap_test_circuit(n: usize, psi_prep: &[Gate], b_prep: &[Gate]) -> Vec<Gate> {
    let anc = 2 * n;
    let mut circuit = psi_prep.to_vec();
    circuit.extend(b_prep.iter().map(|g| g.shifted(n)));
    circuit.push(Gate::h(anc));
    circuit.extend((0..n).map(|q| Gate::cswap(anc, q, q + n)));
    circuit.push(Gate::h(anc));
    circuit
}

/// Estimates the squared overlap `|⟨b|ψ⟩|²` of two `n`-qubit preparations.
pub fn swap_test(n: usize, psi_prep: &[Gate], b_prep: &[Gate], backend: &EvalBackend) -> Result<f64> {
    let circuit = swap_test_circuit(n, psi_prep, b_prep);
    Ok(ancilla_expectation(2 * n + 1, &circuit, 2 * n, backend)?.clamp(0.0, 1.0))
}
