//! Global cost evaluation, parameter-shift gradients and the static/dynamic
//! ansatz optimization loops.

mod cost;
mod optimizer;
mod trace;

pub use cost::{cost_global, CostEvaluator, CostParts, ShotEstimator, DEGENERATE_NORM};
pub use optimizer::{
    choose_sp, gd_step, gradient, gradient_with, run, run_ada, run_asa, solution_state, threshold_for_precision, Mode,
    OptimizerConfig, ShiftRule,
};
pub use trace::{loop_time, RunTrace, TraceRecord};
