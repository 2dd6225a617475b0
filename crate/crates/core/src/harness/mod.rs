//! Config-driven experiments and report emission.

mod config;
mod rows;
mod run;

pub use config::{DirectionSelect, ExperimentConfig, OutputFormat, Scheme, SweepAxis};
pub use rows::{
    cdf_csv, emit_report, empirical_cdf, rows_from_csv, rows_from_json, rows_from_report, rows_to_string, write_rows,
    ReportRow, CSV_HEADER,
};
pub use run::{evaluate_scenario, mean_se, run_experiment, run_experiment_with, trial_statistics, CellResult};
