use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::pauli::PauliString;

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    Rz(f64),
    H,
    S,
    SDagger,
    X,
    Y,
    Z,
    Swap,
    /// Tensor product of Paulis, one symbol per target.
    Pauli(PauliString),
    /// Dense unitary on `targets`, first target most significant.
    Unitary(Arc<DMatrix<Complex64>>),
}

/// A gate on explicit qubit indices, optionally conditioned on `controls`
/// (all must read 1). `CZ`, `CNOT` and `CSWAP` are `Z`, `X` and `Swap` with
/// one control.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl Gate {
    fn one(kind: GateKind, q: usize) -> Gate {
        Gate {
            kind,
            targets: vec![q],
            controls: Vec::new(),
        }
    }

    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::one(GateKind::Rx(theta), q)
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::one(GateKind::Ry(theta), q)
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::one(GateKind::Rz(theta), q)
    }

    pub fn h(q: usize) -> Gate {
        Gate::one(GateKind::H, q)
    }

    pub fn s(q: usize) -> Gate {
        Gate::one(GateKind::S, q)
    }

    pub fn sdg(q: usize) -> Gate {
        Gate::one(GateKind::SDagger, q)
    }

    pub fn x(q: usize) -> Gate {
        Gate::one(GateKind::X, q)
    }

    pub fn y(q: usize) -> Gate {
        Gate::one(GateKind::Y, q)
    }

    pub fn z(q: usize) -> Gate {
        Gate::one(GateKind::Z, q)
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::z(b).controlled_by(a)
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::x(target).controlled_by(control)
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate {
            kind: GateKind::Swap,
            targets: vec![a, b],
            controls: Vec::new(),
        }
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Gate {
        Gate::swap(a, b).controlled_by(control)
    }

    /// Pauli string acting on qubits `0..p.n_qubits()`.
    pub fn pauli(p: PauliString) -> Gate {
        let targets = (0..p.n_qubits()).collect();
        Gate {
            kind: GateKind::Pauli(p),
            targets,
            controls: Vec::new(),
        }
    }

    pub fn pauli_on(p: PauliString, targets: Vec<usize>) -> Gate {
        Gate {
            kind: GateKind::Pauli(p),
            targets,
            controls: Vec::new(),
        }
    }

    pub fn controlled_pauli(control: usize, p: PauliString) -> Gate {
        Gate::pauli(p).controlled_by(control)
    }

    pub fn unitary(matrix: DMatrix<Complex64>, targets: Vec<usize>) -> Gate {
        Gate {
            kind: GateKind::Unitary(Arc::new(matrix)),
            targets,
            controls: Vec::new(),
        }
    }

    pub fn controlled_by(mut self, control: usize) -> Gate {
        self.controls.push(control);
        self
    }

    /// Same gate with every qubit index moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Gate {
        Gate {
            kind: self.kind.clone(),
            targets: self.targets.iter().map(|q| q + offset).collect(),
            controls: self.controls.iter().map(|q| q + offset).collect(),
        }
    }

    pub fn adjoint(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::Rx(t) => GateKind::Rx(-t),
            GateKind::Ry(t) => GateKind::Ry(-t),
            GateKind::Rz(t) => GateKind::Rz(-t),
            GateKind::S => GateKind::SDagger,
            GateKind::SDagger => GateKind::S,
            GateKind::Unitary(m) => GateKind::Unitary(Arc::new(m.adjoint())),
            other => other.clone(),
        };
        Gate {
            kind,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Total number of qubits touched, controls included.
    pub fn arity(&self) -> usize {
        self.targets.len() + self.controls.len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls.iter().chain(&self.targets).copied()
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected_targets = match &self.kind {
            GateKind::Swap => Some(2),
            GateKind::Pauli(p) => Some(p.n_qubits()),
            GateKind::Unitary(m) => {
                if m.nrows() != m.ncols() || m.nrows() != 1 << self.targets.len() {
                    return invalid(format!(
                        "{}x{} unitary does not act on {} targets",
                        m.nrows(),
                        m.ncols(),
                        self.targets.len()
                    ));
                }
                None
            }
            _ => Some(1),
        };
        if let Some(k) = expected_targets {
            if self.targets.len() != k {
                return invalid(format!("{self} expects {k} targets, got {}", self.targets.len()));
            }
        }
        if self.targets.is_empty() {
            return invalid("gate without targets");
        }
        let mut seen = 0u128;
        for q in self.qubits() {
            if q >= n_qubits {
                return invalid(format!("{self}: qubit {q} out of range for {n_qubits} qubits"));
            }
            if q >= 128 || seen & (1 << q) != 0 {
                return invalid(format!("{self}: qubit {q} repeated"));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    /// The 2×2 matrix of a single-qubit kind, `None` for the rest.
    pub(crate) fn single_qubit_matrix(&self) -> Option<[Complex64; 4]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let half = |t: f64| ((t / 2.0).cos(), (t / 2.0).sin());
        Some(match self.kind {
            GateKind::Rx(t) => {
                let (co, si) = half(t);
                [c(co, 0.), c(0., -si), c(0., -si), c(co, 0.)]
            }
            GateKind::Ry(t) => {
                let (co, si) = half(t);
                [c(co, 0.), c(-si, 0.), c(si, 0.), c(co, 0.)]
            }
            GateKind::Rz(t) => {
                let (co, si) = half(t);
                [c(co, -si), c(0., 0.), c(0., 0.), c(co, si)]
            }
            GateKind::H => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                [c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)]
            }
            GateKind::S => [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)],
            GateKind::SDagger => [c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)],
            GateKind::X => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
            GateKind::Y => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
            GateKind::Z => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
            _ => return None,
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in &self.controls {
            f.write_str("C")?;
        }
        match &self.kind {
            GateKind::Rx(t) => write!(f, "RX({t})"),
            GateKind::Ry(t) => write!(f, "RY({t})"),
            GateKind::Rz(t) => write!(f, "RZ({t})"),
            GateKind::H => f.write_str("H"),
            GateKind::S => f.write_str("S"),
            GateKind::SDagger => f.write_str("SDG"),
            GateKind::X => f.write_str("X"),
            GateKind::Y => f.write_str("Y"),
            GateKind::Z => f.write_str("Z"),
            GateKind::Swap => f.write_str("SWAP"),
            GateKind::Pauli(p) => write!(f, "P[{p}]"),
            GateKind::Unitary(m) => write!(f, "U{}", m.nrows()),
        }?;
        write!(f, "{:?}", self.controls.iter().chain(&self.targets).collect::<Vec<_>>())
    }
}
