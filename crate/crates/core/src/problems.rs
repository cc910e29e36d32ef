//! Linear-system instances with controlled condition number and sparsity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VqlsError};
use crate::pauli::{decompose, PauliDecomposition};

pub const MAX_QUBITS: usize = 8;
const SPARSE_RETRIES: usize = 100;
const SPARSE_SHRINK: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub kappa: f64,
    pub sparsity: f64,
    pub seed: u64,
}

/// `A x = b` with `A` held both densely and as a Pauli decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SLEProblem {
    pub n_qubits: usize,
    pub a: DMatrix<Complex64>,
    pub b: Vec<Complex64>,
    pub decomposition: PauliDecomposition,
    pub meta: ProblemMeta,
}

impl SLEProblem {
    /// Wraps `(A, b)`, measuring its condition number and sparsity.
    pub fn new(a: DMatrix<Complex64>, b: Vec<Complex64>, seed: u64) -> Result<SLEProblem> {
        let dim = a.nrows();
        if dim < 2 || !dim.is_power_of_two() || a.ncols() != dim {
            return invalid(format!(
                "A is {}x{}, need a square power-of-two matrix",
                a.nrows(),
                a.ncols()
            ));
        }
        if b.len() != dim {
            return invalid(format!("b has length {}, A has dimension {dim}", b.len()));
        }
        if b.iter().all(|x| x.norm() == 0.0) {
            return invalid("b is the zero vector");
        }
        let meta = ProblemMeta {
            kappa: condition_number(&a)?,
            sparsity: sparsity(&a),
            seed,
        };
        Ok(SLEProblem {
            n_qubits: dim.trailing_zeros() as usize,
            decomposition: decompose(&a)?,
            a,
            b,
            meta,
        })
    }

    /// `A = I` on `n` qubits.
    pub fn identity(n: usize, b: Vec<Complex64>) -> Result<SLEProblem> {
        SLEProblem::new(DMatrix::identity(1 << n, 1 << n), b, 0)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// True when both `A` and `b` have no imaginary parts.
    pub fn is_real(&self) -> bool {
        self.a.iter().chain(&self.b).all(|z| z.im == 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProblemFile {
            n: self.n_qubits,
            a: self
                .a
                .row_iter()
                .map(|row| row.iter().map(|&z| z.into()).collect())
                .collect(),
            b: self.b.iter().map(|&z| z.into()).collect(),
            meta: self.meta,
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses a problem file; the Pauli decomposition is recomputed and the
    /// stored metadata kept as written.
    pub fn from_json(s: &str) -> Result<SLEProblem> {
        let file: ProblemFile = serde_json::from_str(s)?;
        let dim = 1usize << file.n;
        if file.a.len() != dim || file.a.iter().any(|r| r.len() != dim) {
            return invalid(format!("A is not {dim}x{dim}"));
        }
        let a = DMatrix::from_fn(dim, dim, |r, c| file.a[r][c].into());
        let b: Vec<Complex64> = file.b.iter().map(|&z| z.into()).collect();
        let mut p = SLEProblem::new(a, b, file.meta.seed)?;
        p.meta = file.meta;
        Ok(p)
    }
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct JsonComplex {
    re: f64,
    im: f64,
}

impl From<Complex64> for JsonComplex {
    fn from(z: Complex64) -> Self {
        JsonComplex { re: z.re, im: z.im }
    }
}

impl From<JsonComplex> for Complex64 {
    fn from(z: JsonComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<JsonComplex>>,
    b: Vec<JsonComplex>,
    meta: ProblemMeta,
}

fn real(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| Complex64::new(x / norm, 0.0)).collect()
}

/// Haar-distributed orthogonal matrix from the QR factors of a Gaussian matrix.
fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random real symmetric system.
///
/// `target_sparsity == 0` gives a dense `Q·D·Qᵀ` with eigenvalues log-spaced
/// on `[1, target_kappa]`. A positive sparsity fixes the zero count exactly:
/// the diagonal is kept full and the remaining nonzeros are placed as
/// symmetric off-diagonal pairs, whose scale is shrunk until the measured
/// condition number is at most `target_kappa`.
pub fn generate_sle(n_qubits: usize, target_kappa: f64, target_sparsity: f64, seed: u64) -> Result<SLEProblem> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return invalid(format!("qubit count {n_qubits} outside 1..={MAX_QUBITS}"));
    }
    if !(target_kappa >= 1.0 && target_kappa.is_finite()) {
        return invalid(format!("target condition number {target_kappa} must be >= 1"));
    }
    if !(0.0..1.0).contains(&target_sparsity) {
        return invalid(format!("target sparsity {target_sparsity} outside [0, 1)"));
    }
    let dim = 1usize << n_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = if target_sparsity == 0.0 {
        dense_spd(dim, target_kappa, &mut rng)
    } else {
        sparse_symmetric(dim, target_kappa, target_sparsity, &mut rng)?
    };
    let b = random_unit_vector(dim, &mut rng);
    SLEProblem::new(real(&a), b, seed)
}

fn dense_spd(dim: usize, kappa: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = random_orthogonal(dim, rng);
    let eig = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            kappa.powf(r as f64 / (dim - 1) as f64)
        } else {
            0.0
        }
    });
    let a = &q * eig * q.transpose();
    (&a + a.transpose()) * 0.5
}

fn sparse_symmetric(dim: usize, kappa: f64, sparsity: f64, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let failure = |attempts| VqlsError::GenerationFailure {
        sparsity,
        kappa,
        attempts,
    };
    let total = dim * dim;
    let zeros = (sparsity * total as f64).round() as usize;
    let nonzeros = total - zeros;
    if nonzeros < dim || !(nonzeros - dim).is_multiple_of(2) {
        return Err(failure(0));
    }
    let pairs = (nonzeros - dim) / 2;
    let mut slots: Vec<(usize, usize)> = (0..dim).flat_map(|r| (r + 1..dim).map(move |c| (r, c))).collect();
    slots.shuffle(rng);
    slots.truncate(pairs);

    let diag: Vec<f64> = (0..dim).map(|_| rng.random_range(1.0..=kappa.sqrt())).collect();
    let off: Vec<f64> = slots
        .iter()
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * rng.random_range(0.5..1.0)
        })
        .collect();

    let mut alpha = 1.0;
    for _ in 0..SPARSE_RETRIES {
        let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        for (&(r, c), &v) in slots.iter().zip(&off) {
            a[(r, c)] = alpha * v;
            a[(c, r)] = alpha * v;
        }
        if let Ok(k) = condition_number(&real(&a)) {
            if k <= kappa {
                return Ok(a);
            }
        }
        alpha *= SPARSE_SHRINK;
    }
    Err(failure(SPARSE_RETRIES))
}

/// Ratio of the extreme singular values of `A` (the eigenvalue-magnitude ratio
/// when `A` is normal).
pub fn condition_number(a: &DMatrix<Complex64>) -> Result<f64> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return invalid("condition number needs a non-empty square matrix");
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max.is_nan() || max <= 0.0 || min <= max * 1e-14 {
        return Err(VqlsError::SingularMatrix);
    }
    Ok(max / min)
}

/// Fraction of entries that are exactly zero.
pub fn sparsity(a: &DMatrix<Complex64>) -> f64 {
    let zeros = a.iter().filter(|z| z.re == 0.0 && z.im == 0.0).count();
    zeros as f64 / a.len() as f64
}

/// Gaussian elimination with partial pivoting.
pub fn classical_solve(a: &DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || n == 0 {
        return invalid("classical_solve needs a square A and matching b");
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .expect("non-empty range");
        if m[(pivot, col)].norm() <= scale * 1e-14 {
            return Err(VqlsError::SingularMatrix);
        }
        m.swap_rows(pivot, col);
        x.swap(pivot, col);
        let inv = 1.0 / m[(col, col)];
        for row in col + 1..n {
            let f = m[(row, col)] * inv;
            if f == Complex64::default() {
                continue;
            }
            for k in col..n {
                let v = m[(col, k)];
                m[(row, k)] -= f * v;
            }
            let xc = x[col];
            x[row] -= f * xc;
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc -= m[(row, k)] * x[k];
        }
        x[row] = acc / m[(row, row)];
    }
    Ok(x)
}

/// `|⟨u|v⟩|² / (‖u‖² ‖v‖²)`.
pub fn fidelity(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    if u.len() != v.len() {
        return invalid("fidelity of vectors with different lengths");
    }
    let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if nu == 0.0 || nv == 0.0 {
        return invalid("fidelity with a zero vector");
    }
    let dot: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    Ok((dot.norm_sqr() / (nu * nv)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_complex(dim: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Extreme eigenvalue magnitudes of a real symmetric matrix by power
    /// iteration on `A²` and on the shifted `λ_max² I − A²`.
    fn power_kappa(a: &DMatrix<f64>) -> f64 {
        let a2 = a * a;
        let dim = a.nrows();
        let power = |m: &DMatrix<f64>| {
            let mut v = DVector::from_fn(dim, |i, _| 1.0 + i as f64 * 0.01);
            for _ in 0..20_000 {
                v = m * &v;
                v /= v.norm();
            }
            v.dot(&(m * &v))
        };
        let top = power(&a2);
        let shifted = DMatrix::identity(dim, dim) * top - &a2;
        let bottom = top - power(&shifted);
        (top / bottom).sqrt()
    }

    #[test]
    fn identity_kappa() {
        let eye = DMatrix::<Complex64>::identity(4, 4);
        assert_eq!(condition_number(&eye).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(1.0)]));
        assert!((condition_number(&d).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(0.0)]));
        assert!(matches!(condition_number(&d), Err(VqlsError::SingularMatrix)));
        assert!(matches!(
            classical_solve(&d, &[c(1.0), c(1.0)]),
            Err(VqlsError::SingularMatrix)
        ));
    }

    #[test]
    fn kappa_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let sym = (&g + g.transpose()) * 0.5;
        let got = condition_number(&real(&sym)).unwrap();
        let want = power_kappa(&sym);
        assert!((got - want).abs() / want < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity(&random_complex(4, 1)), 0.0);
        let d = DMatrix::<Complex64>::identity(4, 4) * c(3.0);
        assert_eq!(sparsity(&d), 0.75);
        let mut m = DMatrix::<Complex64>::zeros(16, 16);
        for i in 0..16 {
            m[(i, (i * 7) % 16)] = c(1.0);
        }
        assert_eq!(sparsity(&m), 0.9375);
    }

    #[test]
    fn solve_examples() {
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let b = vec![c(0.3), Complex64::new(0.0, 2.0)];
        assert_eq!(classical_solve(&eye, &b).unwrap(), b);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(4.0)]));
        let x = classical_solve(&d, &[c(2.0), c(4.0)]).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-15 && (x[1] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_residual_small() {
        for seed in 0..5 {
            let a = random_complex(16, seed);
            let b: Vec<Complex64> = random_complex(16, seed + 100).column(0).iter().copied().collect();
            let x = classical_solve(&a, &b).unwrap();
            let r = &a * DVector::from_vec(x) - DVector::from_vec(b.clone());
            let bn = DVector::from_vec(b).norm();
            assert!(r.norm() / bn < 1e-10);
        }
    }

    #[test]
    fn fidelity_examples() {
        let u = vec![c(1.0), Complex64::new(0.0, 2.0)];
        assert!((fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&[c(1.0), c(0.0)], &[c(0.0), c(1.0)]).unwrap(), 0.0);
        let v = vec![c(0.3), c(-0.7)];
        let scaled_u: Vec<_> = u.iter().map(|z| z * Complex64::new(0.0, -3.0)).collect();
        let scaled_v: Vec<_> = v.iter().map(|z| z * 5.0).collect();
        assert!((fidelity(&u, &v).unwrap() - fidelity(&scaled_u, &scaled_v).unwrap()).abs() < 1e-14);
        assert!(fidelity(&u, &[c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn solve_then_fidelity_recovers_x() {
        let a = random_complex(8, 5);
        let x: Vec<Complex64> = random_complex(8, 6).column(1).iter().copied().collect();
        let b: Vec<Complex64> = (&a * DVector::from_vec(x.clone())).iter().copied().collect();
        let got = classical_solve(&a, &b).unwrap();
        assert!((fidelity(&got, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_generation_hits_kappa() {
        let p = generate_sle(2, 5.0, 0.0, 3).unwrap();
        assert!((p.meta.kappa - 5.0).abs() / 5.0 < 0.01);
        let eig = p.a.map(|z| z.re).symmetric_eigenvalues();
        let ratio = eig.max() / eig.min();
        assert!((ratio - 5.0).abs() / 5.0 < 0.01);
        assert_eq!(p.meta.sparsity, 0.0);
        let norm: f64 = p.b.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_kappa_is_identity() {
        let p = generate_sle(3, 1.0, 0.0, 8).unwrap();
        assert!((p.meta.kappa - 1.0).abs() < 1e-10);
        assert!((&p.a - DMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        for (kappa, s) in [(7.9, 0.0), (1.5, 0.875)] {
            let a = generate_sle(4, kappa, s, 17).unwrap().to_json().unwrap();
            let b = generate_sle(4, kappa, s, 17).unwrap().to_json().unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sparse_grid_hits_sparsity_and_band() {
        for s in [0.9375, 0.875, 0.8125, 0.75] {
            for seed in 0..3 {
                let p = generate_sle(4, 1.5, s, seed).unwrap();
                assert_eq!(p.meta.sparsity, s);
                assert_eq!(sparsity(&p.a), s);
                assert!(p.meta.kappa >= 1.0 && p.meta.kappa <= 1.5);
                assert!((condition_number(&p.a).unwrap() - p.meta.kappa).abs() / p.meta.kappa < 0.01);
                assert_eq!(p.a.transpose(), p.a);
            }
        }
    }

    #[test]
    fn unreachable_sparse_targets_fail() {
        // 14 zeros leave fewer nonzeros than diagonal entries
        assert!(matches!(
            generate_sle(2, 2.0, 0.9, 0),
            Err(VqlsError::GenerationFailure { .. })
        ));
        // 16 - 5 = 11 nonzeros leaves an odd off-diagonal count
        assert!(matches!(
            generate_sle(2, 2.0, 5.0 / 16.0, 0),
            Err(VqlsError::GenerationFailure { .. })
        ));
        assert!(generate_sle(0, 2.0, 0.0, 0).is_err());
        assert!(generate_sle(9, 2.0, 0.0, 0).is_err());
        assert!(generate_sle(2, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn json_round_trip_and_layout() {
        let p = generate_sle(2, 3.0, 0.0, 4).unwrap();
        let json = p.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n"], 2);
        assert!(v["A"][0][0]["re"].is_f64());
        assert!(v["b"][3]["im"].is_f64());
        assert_eq!(v["meta"]["seed"], 4);
        let back = SLEProblem::from_json(&json).unwrap();
        assert_eq!(back, p);
    }
}
