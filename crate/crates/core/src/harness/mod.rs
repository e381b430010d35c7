//! Seeded campaigns over (n, m) grids, the bound checks run on their
//! records, calibration of the fitted constants, and file output.

pub mod calibrate;
pub mod checks;
pub mod config;
pub mod emit;
pub mod experiment;
pub mod trial;

pub use calibrate::Fixtures;
pub use checks::{
    check_inradius_bound, check_main_theorem, check_second_moment_bound, in_stability_slice,
    vol_root_growth, Quantiles,
};
pub use config::{AlphaRule, EmitFlags, ExperimentConfig, GridCell};
pub use emit::{emit_records, read_csv, read_jsonl, write_csv, write_jsonl, CSV_HEADER};
pub use experiment::{run_campaign, run_experiment, trial_seed, CampaignResult, SummaryStats};
pub use trial::{run_trial, run_trial_with, OracleDeltas, TrialOptions, TrialOutcome, TrialRecord};
