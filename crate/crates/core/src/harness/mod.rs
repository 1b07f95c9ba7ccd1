//! Experiment orchestration: instances, seeded trials, aggregation and export.

mod config;
mod experiment;
mod export;
mod instance;
mod verify;

pub use config::{Algorithm, DStar, ExperimentConfig, NamedRule, RuleOrValue};
pub use experiment::{
    aggregate_series, aggregate_trials, run_experiment, run_sweep, run_trial, run_trials_with,
    trial_seed, AggregateResult, Curve, CurveStats, RunOptions, SweepRow, TrialOutcome,
};
pub use export::{
    parse_table, read_table, render_plot, render_table, write_results, Format, CURVE_HEADER,
    SWEEP_HEADER,
};
pub use instance::{make_sparse_model, sample_sphere_arms, InstanceFile};
pub use verify::{run_verify, Check};
