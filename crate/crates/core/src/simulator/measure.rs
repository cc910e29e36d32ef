use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::Statevector;
use crate::error::{invalid, Result};

pub(crate) fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    let p = p.clamp(0.0, 1.0);
    Binomial::new(n, p).expect("probability clamped to [0, 1]").sample(rng)
}

/// Multinomial sample of `shots` outcomes from `probs`, drawn as a chain of
/// conditional binomials.
pub(crate) fn sample_counts<R: Rng + ?Sized>(rng: &mut R, probs: &[f64], shots: u64) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (count, &p) in counts.iter_mut().zip(probs) {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let k = binomial(rng, remaining, p / mass);
        *count = k;
        remaining -= k;
        mass -= p;
    }
    if remaining > 0 {
        // rounding left mass on the table; give it to the last nonzero outcome
        if let Some(i) = probs.iter().rposition(|&p| p > 0.0) {
            counts[i] += remaining;
        }
    }
    counts
}

/// Marginal distribution over `qubits`; outcome index bit `k - 1 - j` holds qubit `qubits[j]`.
pub(crate) fn marginal(state: &Statevector, qubits: &[usize]) -> Vec<f64> {
    let k = qubits.len();
    let bits: Vec<usize> = qubits.iter().map(|&q| state.bit(q)).collect();
    let mut probs = vec![0.0; 1 << k];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let outcome = bits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| acc | if i & b != 0 { 1 << (k - 1 - j) } else { 0 });
        probs[outcome] += a.norm_sqr();
    }
    probs
}

/// Folds independent per-bit flips with probability `r` into a distribution.
pub(crate) fn apply_readout(probs: &mut [f64], k: usize, r: f64) {
    if r == 0.0 {
        return;
    }
    for j in 0..k {
        let bit = 1 << j;
        for s in 0..probs.len() {
            if s & bit == 0 {
                let (a, b) = (probs[s], probs[s | bit]);
                probs[s] = (1.0 - r) * a + r * b;
                probs[s | bit] = r * a + (1.0 - r) * b;
            }
        }
    }
}

/// Samples `shots` measurements of `qubits` in the computational basis.
///
/// Keys are bitstrings in the order the qubits are listed. A readout flip
/// probability, when given, flips each reported bit independently.
pub fn measure_shots(
    state: &Statevector,
    qubits: &[usize],
    shots: u64,
    seed: u64,
    readout: Option<f64>,
) -> Result<BTreeMap<String, u64>> {
    if qubits.is_empty() {
        return invalid("no qubits to measure");
    }
    if shots == 0 {
        return invalid("shots must be positive");
    }
    for (j, &q) in qubits.iter().enumerate() {
        if q >= state.n_qubits() || qubits[..j].contains(&q) {
            return invalid(format!("bad measured qubit {q}"));
        }
    }
    let k = qubits.len();
    let mut probs = marginal(state, qubits);
    if let Some(r) = readout {
        if !(0.0..=1.0).contains(&r) {
            return invalid(format!("readout probability {r} out of range"));
        }
        apply_readout(&mut probs, k, r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = sample_counts(&mut rng, &probs, shots);
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| (format!("{s:0k$b}"), c))
        .collect())
}
