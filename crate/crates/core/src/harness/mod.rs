//! Experiment configuration, figure presets, seeded Monte Carlo runs and CSV output.

mod config;
mod output;
mod presets;
mod run;

pub use config::{CodebookSpan, CsirMode, ExperimentConfig, Method, Sweep, SweepVariable};
pub use output::{csv_string, format_float, mean_and_std_err, summarize, write_csv, write_csv_to, SummaryRow};
pub use presets::{preset, DESK_TRIALS, FULL_TRIALS, PRESET_NAMES};
pub use run::{run_experiment, Scenario, TrialResult};
