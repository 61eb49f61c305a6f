//! Scenario runner: reads a configuration, integrates the model, evaluates
//! the bounds and writes CSV/JSON (and optionally SVG) output.

pub mod config;
pub mod custom;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod plot;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use pipeline::{run_scenario, Overrides, RunSummary};
