use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, ParamVector};
use crate::error::Result;

use super::optimizer::Mode;

/// State at the start of one optimizer iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub cost: f64,
    pub layers: usize,
    pub params: usize,
}

/// Complete history of one optimization run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunTrace {
    pub mode: Mode,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub final_cost: f64,
    /// Ansatz and angles at the last recorded iteration.
    pub ansatz: AnsatzSpec,
    pub final_params: ParamVector,
    pub layer_cap: usize,
    pub threshold: f64,
    /// Total cost evaluations: `2k + 1` per full iteration, 1 for the last.
    pub cost_evaluations: u64,
    /// Wall-clock seconds per iteration. Not serialized, so trace files stay
    /// deterministic.
    #[serde(skip)]
    pub loop_seconds: Vec<f64>,
}

/// Equality ignores wall-clock timings.
impl PartialEq for RunTrace {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode
            && self.records == other.records
            && self.converged == other.converged
            && self.final_cost.to_bits() == other.final_cost.to_bits()
            && self.ansatz == other.ansatz
            && self.final_params == other.final_params
            && self.layer_cap == other.layer_cap
            && self.threshold == other.threshold
            && self.cost_evaluations == other.cost_evaluations
    }
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_layers(&self) -> usize {
        self.ansatz.n_layers
    }

    pub fn layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.layers)
    }

    /// Mean wall-clock time of one cost evaluation, `t_c`.
    pub fn mean_eval_seconds(&self) -> f64 {
        if self.cost_evaluations == 0 {
            return 0.0;
        }
        self.loop_seconds.iter().sum::<f64>() / self.cost_evaluations as f64
    }

    /// One JSON object per iteration.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Modelled time of one optimization loop with `n_params` parameters and
/// per-evaluation time `t_c`: two shifted evaluations per parameter.
pub fn loop_time(n_params: usize, t_c: f64) -> f64 {
    2.0 * n_params as f64 * t_c
}
