//! Experiment engine behind the command-line tool.

pub mod config;
pub mod experiment;

pub use config::{Algorithm, GeneratorSpec, NoiseConfig, NoiseCount, RunConfig, SampleSpec};
pub use experiment::{
    cell_config, cell_seed, cmd_compare_mixture, cmd_gen, cmd_run, cmd_sweep, execute, prepare,
    run_trial, CompareSummary, ComparePoint, RunSummary, SweepCell, SweepGrid, SweepSummary,
    TrialOutcome,
};
