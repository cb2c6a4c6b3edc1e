//! Experiment configs, Monte Carlo runner, CSV output and SVG plots.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod runner;

pub use config::{load_config, parse_config, parse_suite, Bits, ExperimentConfig, FeedbackSpec, Suite};
pub use output::{run_experiment, run_suite, summarize, Metric, Summary};
pub use plot::emit_plot;
pub use presets::{load_preset, PRESETS};
pub use runner::{prepare_trial, run_trial, run_trials, trial_seed, TraceRecord, TrialRunner};
