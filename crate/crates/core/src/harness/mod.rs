//! Experiment driver: Monte Carlo sweeps over antennas, SNR or snapshot
//! count, repeated-training box plots, CSV output and the self-test.
//!
//! All randomness in a sweep comes from keyed streams (master seed, purpose,
//! sweep point, trial), so every estimator sees identical trials and results
//! do not depend on the worker count.

mod boxplot;
mod config;
mod records;
mod registry;
mod selftest;
mod stats;
mod sweep;
#[cfg(test)]
mod tests;

pub use boxplot::{run_boxplot, BoxplotResult};
pub use config::{
    BasePoint, BoxplotSettings, EstimatorSettings, ExperimentConfig, MetricKind, ScenarioConfig, SweepConfig,
    SweepVariable, TrainingSettings,
};
pub use records::{emit_csv, parse_csv, read_csv, write_box_csv, write_csv, BoxRecord, ResultRecord};
pub use registry::Algorithm;
pub use selftest::run_selftest;
pub use stats::{box_stats, mean_stderr, BoxStats};
pub use sweep::{
    learned_params, prepare_point, run_mse_sweep, run_rate_sweep, sweep_points, training_scenario, PreparedPoint,
    SweepPoint, Trial,
};
