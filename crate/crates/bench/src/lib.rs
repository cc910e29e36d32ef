//! Experiment harness for the variational linear solver.
//!
//! An [`ExperimentSpec`] names one experiment family and its grids. The
//! harness expands it into problems and paired ADA/ASA runs, executes the
//! runs on a bounded worker pool, and writes problems, traces, per-run
//! records, summary tables and a hashed manifest under one output directory.
//! Everything written is a pure function of the spec, so reruns reproduce
//! the same bytes and interrupted batches resume from validated traces.

mod error;
pub mod report;
pub mod runner;
pub mod spec;

pub use error::{BenchError, Result};
pub use report::{load_records, write_reports, BatchReport};
pub use runner::{run_experiment, BatchResult, RunRecord};
pub use spec::{BackendSettings, ExperimentSpec, Family, Plan};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
