use nalgebra::DVector;
use num_complex::Complex64;

use crate::ansatz::{ansatz_state, build_circuit, AnsatzSpec};
use crate::error::{invalid, Result, VqlsError};
use crate::pauli::{decompose, PauliDecomposition, PauliString};
use crate::problems::SLEProblem;
use crate::simulator::{derive_seed, hadamard_test, state_prep_gate, swap_test, EvalBackend, Gate, Part};

/// Trial states with `⟨ψ|ψ⟩` below this are rejected.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// How SHOTS mode assembles the cost from circuit estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotEstimator {
    /// Numerator from swap tests (diagonal terms) and Hadamard tests of
    /// `⟨b|P_l|x⟩` (cross terms); denominator from Hadamard tests of `⟨x|P_k|x⟩`.
    #[default]
    SwapHadamard,
    /// Numerator and denominator both as Pauli expectations `⟨x|P_k|x⟩`,
    /// weighted by the decompositions of `A†|b⟩⟨b|A` and `A†A`.
    PauliExpectation,
}

/// `|⟨b|ψ⟩|²` and `⟨ψ|ψ⟩` for `|ψ⟩ = A V(θ)|0⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostParts {
    pub numerator: f64,
    pub denominator: f64,
    /// Delta-method standard error of the resulting cost (zero in EXACT mode).
    pub sigma: f64,
}

impl CostParts {
    /// `1 − N/D`, clamped to `[0, 1]`.
    pub fn cost(&self) -> Result<f64> {
        if self.denominator.is_nan() || self.denominator < DEGENERATE_NORM {
            return Err(VqlsError::DegenerateState(self.denominator));
        }
        Ok((1.0 - self.numerator / self.denominator).clamp(0.0, 1.0))
    }
}

/// Evaluates the global cost of one problem on one backend.
pub struct CostEvaluator<'a> {
    problem: &'a SLEProblem,
    backend: EvalBackend,
    estimator: ShotEstimator,
    b_hat: Vec<Complex64>,
    oracle: Gate,
    gram: PauliDecomposition,
    projector: Option<PauliDecomposition>,
}

impl<'a> CostEvaluator<'a> {
    pub fn new(problem: &'a SLEProblem, backend: EvalBackend) -> Result<CostEvaluator<'a>> {
        backend.validate()?;
        let norm = problem.b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let b_hat = problem.b.iter().map(|z| z / norm).collect();
        let gram = decompose(&(problem.a.adjoint() * &problem.a))?;
        Ok(CostEvaluator {
            problem,
            oracle: state_prep_gate(&problem.b)?,
            backend,
            estimator: ShotEstimator::default(),
            b_hat,
            gram,
            projector: None,
        })
    }

    pub fn with_estimator(mut self, estimator: ShotEstimator) -> Result<CostEvaluator<'a>> {
        if estimator == ShotEstimator::PauliExpectation && self.projector.is_none() {
            let ab = self.problem.a.adjoint() * DVector::from_column_slice(&self.b_hat);
            self.projector = Some(decompose(&(&ab * ab.adjoint()))?);
        }
        self.estimator = estimator;
        Ok(self)
    }

    pub fn problem(&self) -> &SLEProblem {
        self.problem
    }

    pub fn backend(&self) -> &EvalBackend {
        &self.backend
    }

    /// Numerator and denominator at `params`. `nonce` selects the random
    /// streams of SHOTS mode; EXACT mode ignores it.
    pub fn parts(&self, spec: &AnsatzSpec, params: &[f64], nonce: u64) -> Result<CostParts> {
        if spec.n_qubits != self.problem.n_qubits {
            return invalid(format!(
                "{}-qubit ansatz for a {}-qubit problem",
                spec.n_qubits, self.problem.n_qubits
            ));
        }
        if self.backend.is_exact() {
            return self.exact_parts(spec, params);
        }
        let v = build_circuit(spec, params)?;
        let real_states = spec.is_real() && self.problem.is_real();
        let mut circuits = CircuitSeeds::new(self.backend.seed, nonce);
        match self.estimator {
            ShotEstimator::SwapHadamard => self.swap_hadamard_parts(&v, real_states, &mut circuits),
            ShotEstimator::PauliExpectation => self.expectation_parts(&v, real_states, &mut circuits),
        }
    }

    pub fn cost(&self, spec: &AnsatzSpec, params: &[f64], nonce: u64) -> Result<f64> {
        self.parts(spec, params, nonce)?.cost()
    }

    fn exact_parts(&self, spec: &AnsatzSpec, params: &[f64]) -> Result<CostParts> {
        let x = ansatz_state(spec, params)?;
        let psi: Vec<Complex64> = if self.problem.decomposition.len() < self.problem.dim() {
            self.problem.decomposition.apply(x.amplitudes())
        } else {
            (&self.problem.a * DVector::from_column_slice(x.amplitudes()))
                .iter()
                .copied()
                .collect()
        };
        let overlap: Complex64 = self.b_hat.iter().zip(&psi).map(|(b, p)| b.conj() * p).sum();
        Ok(CostParts {
            numerator: overlap.norm_sqr(),
            denominator: psi.iter().map(|z| z.norm_sqr()).sum(),
            sigma: 0.0,
        })
    }

    fn n(&self) -> usize {
        self.problem.n_qubits
    }

    /// `⟨x|P|x⟩` for Hermitian `P`, by a real-part Hadamard test.
    fn pauli_expectation(
        &self,
        v: &[Gate],
        p: &PauliString,
        real_states: bool,
        seeds: &mut CircuitSeeds,
    ) -> Result<Option<f64>> {
        if p.is_identity() {
            return Ok(None);
        }
        if real_states && p.num_y() % 2 == 1 {
            // real x and imaginary antisymmetric P
            return Ok(Some(0.0));
        }
        let w = [Gate::pauli(p.clone())];
        hadamard_test(self.n(), v, &w, Part::Real, &seeds.next(&self.backend)).map(Some)
    }

    fn swap_hadamard_parts(&self, v: &[Gate], real_states: bool, seeds: &mut CircuitSeeds) -> Result<CostParts> {
        let n = self.n();
        let u_dag = self.oracle.adjoint();
        let terms = self.problem.decomposition.terms();
        let mut gammas = Vec::with_capacity(terms.len());
        let mut swaps = Vec::with_capacity(terms.len());
        for term in terms {
            let p_gate = Gate::pauli(term.pauli.clone());
            let mut w = v.to_vec();
            w.push(p_gate.clone());
            w.push(u_dag.clone());
            let odd = term.pauli.num_y() % 2 == 1;
            let re = if real_states && odd {
                None
            } else {
                Some(hadamard_test(n, &[], &w, Part::Real, &seeds.next(&self.backend))?)
            };
            let im = if real_states && !odd {
                None
            } else {
                Some(hadamard_test(n, &[], &w, Part::Imag, &seeds.next(&self.backend))?)
            };
            gammas.push((re, im));
            let mut psi_prep = v.to_vec();
            psi_prep.push(p_gate);
            swaps.push(swap_test(
                n,
                &psi_prep,
                std::slice::from_ref(&self.oracle),
                &seeds.next(&self.backend),
            )?);
        }

        let gamma = |(re, im): (Option<f64>, Option<f64>)| Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0));
        let g: Complex64 = terms.iter().zip(&gammas).map(|(t, &e)| t.coeff * gamma(e)).sum();
        let mut numerator = g.norm_sqr();
        for ((t, &e), &s) in terms.iter().zip(&gammas).zip(&swaps) {
            let w = t.coeff.norm_sqr();
            numerator += w * (s - gamma(e).norm_sqr());
        }

        // (estimate, dN/de, dD/de) for the delta-method error
        let mut sens: Vec<(f64, f64, f64)> = Vec::new();
        for ((t, &(re, im)), &s) in terms.iter().zip(&gammas).zip(&swaps) {
            let w = t.coeff.norm_sqr();
            if let Some(a) = re {
                sens.push((a, 2.0 * (g.conj() * t.coeff).re - 2.0 * w * a, 0.0));
            }
            if let Some(b) = im {
                let di = 2.0 * (g.conj() * t.coeff * Complex64::i()).re;
                sens.push((b, di - 2.0 * w * b, 0.0));
            }
            sens.push((s, w, 0.0));
        }

        let mut denominator = 0.0;
        for term in self.gram.terms() {
            let gk = term.coeff.re;
            match self.pauli_expectation(v, &term.pauli, real_states, seeds)? {
                None => denominator += gk,
                Some(e) => {
                    denominator += gk * e;
                    sens.push((e, 0.0, gk));
                }
            }
        }
        Ok(self.with_sigma(numerator, denominator, &sens))
    }

    fn expectation_parts(&self, v: &[Gate], real_states: bool, seeds: &mut CircuitSeeds) -> Result<CostParts> {
        let projector = self.projector.as_ref().expect("projector built with the estimator");
        // union of strings, each estimated once and shared by N and D
        let mut strings: Vec<&PauliString> = projector
            .terms()
            .iter()
            .chain(self.gram.terms())
            .map(|t| &t.pauli)
            .collect();
        strings.sort();
        strings.dedup();
        let (mut numerator, mut denominator) = (0.0, 0.0);
        let mut sens = Vec::with_capacity(strings.len());
        for p in strings {
            let mk = projector.coefficient(p).re;
            let gk = self.gram.coefficient(p).re;
            match self.pauli_expectation(v, p, real_states, seeds)? {
                None => {
                    numerator += mk;
                    denominator += gk;
                }
                Some(e) => {
                    numerator += mk * e;
                    denominator += gk * e;
                    sens.push((e, mk, gk));
                }
            }
        }
        Ok(self.with_sigma(numerator, denominator, &sens))
    }

    fn with_sigma(&self, numerator: f64, denominator: f64, sens: &[(f64, f64, f64)]) -> CostParts {
        let shots = self.backend.shots as f64;
        let d2 = denominator * denominator;
        let var: f64 = sens
            .iter()
            .map(|&(e, dn, dd)| {
                let dc = -(dn * denominator - numerator * dd) / d2;
                dc * dc * (1.0 - e * e).max(0.0) / shots
            })
            .sum();
        CostParts {
            numerator,
            denominator,
            sigma: var.sqrt(),
        }
    }
}

/// Hands out one independent backend seed per circuit of a cost evaluation.
struct CircuitSeeds {
    base: u64,
    nonce: u64,
    index: u64,
}

impl CircuitSeeds {
    fn new(base: u64, nonce: u64) -> CircuitSeeds {
        CircuitSeeds { base, nonce, index: 0 }
    }

    fn next(&mut self, backend: &EvalBackend) -> EvalBackend {
        let seed = derive_seed(self.base, &[self.nonce, self.index]);
        self.index += 1;
        backend.with_seed(seed)
    }
}

/// `C_G(θ)` with nonce 0.
pub fn cost_global(evaluator: &CostEvaluator<'_>, spec: &AnsatzSpec, params: &[f64]) -> Result<f64> {
    evaluator.cost(spec, params, 0)
}
