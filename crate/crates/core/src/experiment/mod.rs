//! Config-driven experiments: parse a JSON config, run the matching
//! pipeline, and collect a report plus CSV artifacts.

mod config;
mod report;
mod run;

pub use config::{parse_config, validate, ExperimentConfig, ExperimentKind, ModelConfig, OutputConfig, RawConfig};
pub use report::{Artifact, ExperimentReport, ResultRow, RunOutput};
pub use run::{run_experiment, SAMPLE_COLUMNS};

/// JSON schema of the config file.
pub const CONFIG_SCHEMA: &str = include_str!("schema.json");
