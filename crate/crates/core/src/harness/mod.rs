//! Experiment orchestration: comparison sweeps, regret analytics and
//! per-layer profiling.

mod experiment;
pub mod regret;
pub mod sweep;

pub use experiment::{
    run_algorithm, run_experiment, run_experiment_on, thread_count, AlgoKind, ExperimentOutcome, ExperimentSpec,
    RegretSummary, SummaryRow,
};
pub use regret::{average_mean_regret, compute_regret, decay_exponent, RegretCurve};
pub use sweep::{profile_sweep, sweep_csv, LayerStats};
