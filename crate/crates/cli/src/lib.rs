//! Configuration, experiment runner and CSV output behind the `qsteer`
//! command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod matrix;
pub mod output;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, sweep, ResultRow, RunError};
pub use output::{emit_csv, to_csv_string, write_csv};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub exact_only: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<(), ConfigError> {
        if let Some(seed) = self.seed {
            config.seed = Some(seed);
        }
        if let Some(n) = self.trajectories {
            config.trajectories = Some(n);
        }
        if self.exact_only {
            config.exact_only = true;
        }
        config.validate()
    }
}
