use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum VqlsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix decomposes to zero: every Pauli coefficient fell below the drop threshold")]
    EmptyDecomposition,
    #[error("degenerate trial state: <psi|psi> = {0:e} is below 1e-12 (A annihilates V(theta)|0>)")]
    DegenerateState(f64),
    #[error("matrix is singular to working precision")]
    SingularMatrix,
    #[error("layer cap of {cap} reached")]
    CapExceeded { cap: usize },
    #[error("could not generate a problem with sparsity {sparsity} and kappa {kappa} after {attempts} attempts")]
    GenerationFailure { sparsity: f64, kappa: f64, attempts: usize },
    #[error("empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = VqlsError> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(VqlsError::InvalidInput(msg.into()))
}
