//! Pauli strings and the decomposition of a square matrix into a weighted sum
//! of them, `A = Σ_l c_l P_l`.
//!
//! Qubit ordering is global across the crate: the leftmost symbol of a label
//! acts on qubit 0, which is the most significant bit of a computational-basis
//! index. `"XZ"` is therefore `kron(X, Z)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result, VqlsError};
use crate::simulator::Statevector;

/// Coefficients with modulus below this are omitted from decompositions.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// A tensor product of single-qubit Paulis, one symbol per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return invalid("a Pauli string needs at least one qubit");
        }
        Ok(PauliString(ops))
    }

    pub(crate) fn from_ops(ops: Vec<Pauli>) -> Self {
        debug_assert!(!ops.is_empty());
        PauliString(ops)
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString(vec![Pauli::I; n_qubits.max(1)])
    }

    /// Builds the string whose X-part and Z-part bit patterns are `x` and `z`
    /// (bit `n - 1 - q` belongs to qubit `q`).
    pub fn from_masks(n_qubits: usize, x: usize, z: usize) -> Self {
        let ops = (0..n_qubits)
            .map(|q| {
                let bit = 1 << (n_qubits - 1 - q);
                Pauli::from_bits(x & bit != 0, z & bit != 0)
            })
            .collect();
        PauliString(ops)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity symbols.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn num_y(&self) -> usize {
        self.0.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `(x_mask, z_mask)` over the string's own `n`-bit register.
    pub fn masks(&self) -> (usize, usize) {
        let n = self.n_qubits();
        self.0.iter().enumerate().fold((0, 0), |(x, z), (q, p)| {
            let bit = 1 << (n - 1 - q);
            let (px, pz) = p.bits();
            (x | if px { bit } else { 0 }, z | if pz { bit } else { 0 })
        })
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.symbol()).collect()
    }

    /// Dense `2^n × 2^n` matrix of the string.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let (x, z) = self.masks();
        let base = i_pow(self.num_y());
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            m[(col ^ x, col)] = base * parity_sign(col & z);
        }
        m
    }

    /// Writes `P · input` into `out`. Both slices have length `2^n`.
    pub fn apply_to(&self, input: &[Complex64], out: &mut [Complex64]) {
        let (x, z) = self.masks();
        let base = i_pow(self.num_y());
        for (i, amp) in input.iter().enumerate() {
            out[i ^ x] = base * parity_sign(i & z) * amp;
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliString {
    type Err = VqlsError;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => invalid(format!("'{other}' is not a Pauli symbol")),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `i^k`.
pub(crate) fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[inline]
pub(crate) fn parity_sign(bits: usize) -> f64 {
    if bits.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Dense matrix of a Pauli string (free-function form).
pub fn dense_matrix(p: &PauliString) -> DMatrix<Complex64> {
    p.dense_matrix()
}

/// Applies `p` to a statevector of the same width.
pub fn apply_pauli(state: &Statevector, p: &PauliString) -> Result<Statevector> {
    if state.n_qubits() != p.n_qubits() {
        return invalid(format!(
            "Pauli string of length {} applied to a {}-qubit state",
            p.n_qubits(),
            state.n_qubits()
        ));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
    p.apply_to(state.amplitudes(), &mut out);
    Ok(Statevector::from_raw(out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub pauli: PauliString,
}

/// `A = Σ_l c_l P_l` with unique labels, sorted lexicographically (I < X < Y < Z).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliDecomposition {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliDecomposition {
    /// Builds a decomposition from raw terms, merging duplicate labels and
    /// dropping coefficients below `DEFAULT_DROP_THRESHOLD`.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return invalid("decomposition needs at least one qubit");
        }
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for term in terms {
            if term.pauli.n_qubits() != n_qubits {
                return invalid(format!("term {} does not have {} qubits", term.pauli, n_qubits));
            }
            *merged.entry(term.pauli).or_default() += term.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() >= DEFAULT_DROP_THRESHOLD)
            .map(|(pauli, coeff)| PauliTerm { coeff, pauli })
            .collect();
        Ok(PauliDecomposition { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, label: &PauliString) -> Complex64 {
        self.terms
            .binary_search_by(|t| t.pauli.cmp(label))
            .map(|i| self.terms[i].coeff)
            .unwrap_or_default()
    }

    /// `Σ_l c_l P_l |x⟩` without forming any dense matrix.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut scratch = vec![Complex64::new(0.0, 0.0); x.len()];
        for term in &self.terms {
            term.pauli.apply_to(x, &mut scratch);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o += term.coeff * s;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Decomposes `a` (dimension `2^n`) with the default drop threshold.
pub fn decompose(a: &DMatrix<Complex64>) -> Result<PauliDecomposition> {
    decompose_with_threshold(a, DEFAULT_DROP_THRESHOLD)
}

/// `c_l = Tr(P_l A) / 2^n` over all `4^n` strings.
///
/// For a fixed X-mask `x`, `Tr(P_{x,z} A) = i^{|x∧z|} Σ_k (-1)^{k·z} A[k, k⊕x]`,
/// which is a Walsh–Hadamard transform of the `x`-shifted diagonal. All
/// coefficients therefore cost `O(4^n · n)`.
pub fn decompose_with_threshold(a: &DMatrix<Complex64>, drop_threshold: f64) -> Result<PauliDecomposition> {
    let dim = a.nrows();
    if dim != a.ncols() {
        return invalid(format!("matrix is {}x{}, not square", a.nrows(), a.ncols()));
    }
    if dim < 2 || !dim.is_power_of_two() {
        return invalid(format!("matrix dimension {dim} is not a power of two >= 2"));
    }
    let n = dim.trailing_zeros() as usize;
    let scale = 1.0 / dim as f64;
    let mut terms = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    for x in 0..dim {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = a[(k, k ^ x)];
        }
        walsh_hadamard(&mut buf);
        for (z, &sum) in buf.iter().enumerate() {
            let coeff = i_pow((x & z).count_ones() as usize) * sum * scale;
            if coeff.norm() >= drop_threshold {
                terms.push(PauliTerm {
                    coeff,
                    pauli: PauliString::from_masks(n, x, z),
                });
            }
        }
    }
    if terms.is_empty() {
        return Err(VqlsError::EmptyDecomposition);
    }
    terms.sort_by(|l, r| l.pauli.cmp(&r.pauli));
    Ok(PauliDecomposition { n_qubits: n, terms })
}

fn walsh_hadamard(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
}

/// `Σ_l c_l · dense(P_l)`.
pub fn reconstruct(d: &PauliDecomposition) -> DMatrix<Complex64> {
    let dim = 1usize << d.n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for term in &d.terms {
        let (x, z) = term.pauli.masks();
        let base = i_pow(term.pauli.num_y()) * term.coeff;
        for col in 0..dim {
            m[(col ^ x, col)] += base * parity_sign(col & z);
        }
    }
    m
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    re: f64,
    im: f64,
    pauli: PauliString,
}

#[derive(Serialize, Deserialize)]
struct DecompositionWire {
    n: usize,
    terms: Vec<TermWire>,
}

impl Serialize for PauliDecomposition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DecompositionWire {
            n: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| TermWire {
                    re: t.coeff.re,
                    im: t.coeff.im,
                    pauli: t.pauli.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliDecomposition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = DecompositionWire::deserialize(deserializer)?;
        let terms = wire.terms.into_iter().map(|t| PauliTerm {
            coeff: Complex64::new(t.re, t.im),
            pauli: t.pauli,
        });
        PauliDecomposition::from_terms(wire.n, terms).map_err(serde::de::Error::custom)
    }
}
