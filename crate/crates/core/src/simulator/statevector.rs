use num_complex::Complex64;

use super::gate::{Gate, GateKind};
use crate::error::{invalid, Result};
use crate::pauli::{i_pow, parity_sign, Pauli};

/// Dense `2^n` amplitude array indexed by computational-basis integer.
/// Qubit `q` is bit `n - 1 - q` of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Statevector {
        Statevector::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Statevector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// Normalized copy of `amps`; the length must be a power of two ≥ 2.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Statevector> {
        let mut s = Statevector::checked(amps)?;
        let norm = s.norm();
        if norm == 0.0 || !norm.is_finite() {
            return invalid("cannot normalize a zero or non-finite vector");
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    fn checked(amps: Vec<Complex64>) -> Result<Statevector> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return invalid(format!("state length {dim} is not a power of two >= 2"));
        }
        Ok(Statevector::from_raw(amps))
    }

    /// Wraps amplitudes as-is (no normalization); the length must be a power of two.
    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Statevector {
        debug_assert!(amps.len().is_power_of_two());
        Statevector {
            n_qubits: amps.len().trailing_zeros() as usize,
            amps,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    #[inline]
    pub(crate) fn bit(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Marginal probability that qubit `q` reads 1.
    pub fn probability_one(&self, q: usize) -> f64 {
        let b = self.bit(q);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & b != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &[Gate]) -> Result<()> {
        circuit.iter().try_for_each(|g| self.apply(g))
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        let cmask = gate.controls.iter().fold(0, |m, &q| m | self.bit(q));
        if let Some(m) = gate.single_qubit_matrix() {
            self.apply_single(m, gate.targets[0], cmask);
            return;
        }
        match &gate.kind {
            GateKind::Swap => self.apply_swap(gate.targets[0], gate.targets[1], cmask),
            GateKind::Pauli(p) => self.apply_pauli(p.ops(), &gate.targets, cmask),
            GateKind::Unitary(m) => self.apply_dense(m, &gate.targets, cmask),
            _ => unreachable!("single-qubit kinds handled above"),
        }
    }

    fn apply_single(&mut self, m: [Complex64; 4], target: usize, cmask: usize) {
        let tb = self.bit(target);
        let diagonal = m[1] == Complex64::default() && m[2] == Complex64::default();
        for i in 0..self.amps.len() {
            if i & tb != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | tb;
            if diagonal {
                self.amps[i] *= m[0];
                self.amps[j] *= m[3];
            } else {
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0] * a + m[1] * b;
                self.amps[j] = m[2] * a + m[3] * b;
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize, cmask: usize) {
        let (ab, bb) = (self.bit(a), self.bit(b));
        for i in 0..self.amps.len() {
            if i & ab != 0 && i & bb == 0 && i & cmask == cmask {
                self.amps.swap(i, i ^ ab ^ bb);
            }
        }
    }

    fn apply_pauli(&mut self, ops: &[Pauli], targets: &[usize], cmask: usize) {
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0usize);
        for (&op, &q) in ops.iter().zip(targets) {
            let b = self.bit(q);
            match op {
                Pauli::I => {}
                Pauli::X => x |= b,
                Pauli::Y => {
                    x |= b;
                    z |= b;
                    ny += 1;
                }
                Pauli::Z => z |= b,
            }
        }
        let base = i_pow(ny);
        for i in 0..self.amps.len() {
            if i & cmask != cmask {
                continue;
            }
            let j = i ^ x;
            if x == 0 {
                self.amps[i] *= base * parity_sign(i & z);
            } else if i < j {
                let (ai, aj) = (self.amps[i], self.amps[j]);
                self.amps[j] = base * parity_sign(i & z) * ai;
                self.amps[i] = base * parity_sign(j & z) * aj;
            }
        }
    }

    fn apply_dense(&mut self, m: &nalgebra::DMatrix<Complex64>, targets: &[usize], cmask: usize) {
        let k = targets.len();
        let sub = 1usize << k;
        let bits: Vec<usize> = targets.iter().map(|&q| self.bit(q)).collect();
        let tmask = bits.iter().fold(0, |acc, b| acc | b);
        let offsets: Vec<usize> = (0..sub)
            .map(|s| {
                (0..k)
                    .filter(|r| s & (1 << (k - 1 - r)) != 0)
                    .fold(0, |acc, r| acc | bits[r])
            })
            .collect();
        let mut gathered = vec![Complex64::default(); sub];
        for base in 0..self.amps.len() {
            if base & tmask != 0 || base & cmask != cmask {
                continue;
            }
            for (g, off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amps[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = Complex64::default();
                for (col, g) in gathered.iter().enumerate() {
                    acc += m[(row, col)] * g;
                }
                self.amps[base | off] = acc;
            }
        }
    }
}
