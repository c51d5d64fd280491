//! Scenario files, run drivers, and artifact writers behind the
//! `token-auction` command.

mod config;
mod output;
mod run;

pub use config::{
    validate, DistributionSpec, ExtensionSpec, McSpec, OutputSpec, PolicySpec, ScenarioConfig, UtilitySpec, Violation,
};
pub use output::{csv_body, format_number, ArtifactHeader, Cell, OutputFormat, TableWriter};
pub use run::{run, run_config, Command, Overrides, RunError, RunReport};
