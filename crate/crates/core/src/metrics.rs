//! Resource accounting over run traces and paired ADA/ASA summaries.

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::engine::RunTrace;
use crate::error::{invalid, Result, VqlsError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Total resource cost: layer count summed over iterations.
    pub trc: u64,
    pub final_layers: usize,
    pub total_iterations: usize,
    pub converged: bool,
    /// Ansatz gate count summed over iterations.
    pub eqd_proxy: u64,
    pub final_cost: f64,
}

/// Cumulative layer count of a per-iteration layer sequence.
pub fn trc_of_layers(layers: &[usize]) -> Result<u64> {
    if layers.is_empty() {
        return Err(VqlsError::EmptyTrace);
    }
    Ok(layers.iter().map(|&d| d as u64).sum())
}

pub fn trc(trace: &RunTrace) -> Result<u64> {
    trc_of_layers(&trace.layers().collect::<Vec<_>>())
}

/// `(trc_ada − trc_asa) / trc_ada`; negative when ADA is cheaper.
pub fn artrc_deviation(trc_ada: u64, trc_asa: u64) -> Result<f64> {
    if trc_ada == 0 {
        return invalid("ADA resource cost must be positive");
    }
    Ok((trc_ada as f64 - trc_asa as f64) / trc_ada as f64)
}

pub fn eqd_proxy(trace: &RunTrace) -> u64 {
    trace
        .layers()
        .map(|d| {
            AnsatzSpec {
                n_layers: d,
                ..trace.ansatz
            }
            .gate_count() as u64
        })
        .sum()
}

pub fn run_metrics(trace: &RunTrace) -> Result<RunMetrics> {
    Ok(RunMetrics {
        trc: trc(trace)?,
        final_layers: trace.final_layers(),
        total_iterations: trace.iterations(),
        converged: trace.converged,
        eqd_proxy: eqd_proxy(trace),
        final_cost: trace.final_cost,
    })
}

/// One row of a paired summary table. Means and the win percentage are over
/// pairs in which both runs converged; they are `None` when there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group_key: String,
    pub mean_trc_ada: Option<f64>,
    pub mean_trc_asa: Option<f64>,
    pub mean_final_layers_ada: Option<f64>,
    pub mean_final_layers_asa: Option<f64>,
    pub mean_iters_ada: Option<f64>,
    pub mean_iters_asa: Option<f64>,
    pub pct_ada_wins: Option<f64>,
    pub n_converged: usize,
    pub n_total: usize,
}

impl SummaryRow {
    /// True when no pair in the group converged.
    pub fn is_empty(&self) -> bool {
        self.n_converged == 0
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Aggregates `(ada, asa)` pairs that share a problem and seed.
pub fn summarize_batch(group_key: &str, pairs: &[(RunMetrics, RunMetrics)]) -> Result<SummaryRow> {
    if pairs.is_empty() {
        return invalid(format!("group {group_key} has no runs"));
    }
    let ok: Vec<_> = pairs.iter().filter(|(a, s)| a.converged && s.converged).collect();
    let wins = ok.iter().filter(|(a, s)| a.trc < s.trc).count();
    Ok(SummaryRow {
        group_key: group_key.to_string(),
        mean_trc_ada: mean(ok.iter().map(|(a, _)| a.trc as f64)),
        mean_trc_asa: mean(ok.iter().map(|(_, s)| s.trc as f64)),
        mean_final_layers_ada: mean(ok.iter().map(|(a, _)| a.final_layers as f64)),
        mean_final_layers_asa: mean(ok.iter().map(|(_, s)| s.final_layers as f64)),
        mean_iters_ada: mean(ok.iter().map(|(a, _)| a.total_iterations as f64)),
        mean_iters_asa: mean(ok.iter().map(|(_, s)| s.total_iterations as f64)),
        pct_ada_wins: (!ok.is_empty()).then(|| 100.0 * wins as f64 / ok.len() as f64),
        n_converged: ok.len(),
        n_total: pairs.len(),
    })
}

/// Mean ARTRC deviation over converged pairs.
pub fn mean_artrc(pairs: &[(RunMetrics, RunMetrics)]) -> Result<Option<f64>> {
    let devs = pairs
        .iter()
        .filter(|(a, s)| a.converged && s.converged)
        .map(|(a, s)| artrc_deviation(a.trc, s.trc))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(devs.into_iter()))
}
