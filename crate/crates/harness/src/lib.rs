//! Experiment configuration, seeded multi-repetition runs and CSV output
//! for the optimizers in `robot-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod summary;
pub mod tracefile;

pub use config::{diversity_by_name, ExperimentConfig, Method};
pub use error::{HarnessError, Result};
pub use experiment::{run_config_file, run_experiment, run_once, ExperimentOutput};
pub use summary::{checkpoints, summarize, SummaryRow};
