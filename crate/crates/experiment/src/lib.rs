//! Experiment runner: TOML configs, single runs, sweeps, baselines and
//! multiply-accumulate accounting, with CSV output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use runner::{
    baseline_digital, baseline_digital_prepared, baseline_no_ms, mac_count, no_ms_config, prepare_data, run,
    run_prepared, sweep, MacReport, Prepared, RunRecord, SeedResult, SweepAxis,
};
