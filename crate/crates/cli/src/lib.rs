//! Scenario runner for the `wardrop` command.

pub mod commands;
pub mod output;
pub mod presets;
pub mod scenario;

pub use commands::{compare, run, solve, CliError, Method, RunOptions, Status};
pub use scenario::{BuiltScenario, Scenario, ScenarioError};
