//! Scenario runner for the `dipbat` workbench: configuration files,
//! delay sweeps, CSV export and the built-in self test.

pub mod config;
mod error;
pub mod output;
pub mod scenario;
pub mod selftest;

pub use error::CliError;
pub use scenario::{run_scenario, run_sweep, DesignModel, Scenario, ScenarioReport, SweepRow};
