//! Scenario configuration, runners and artifact writers for the `octoarm`
//! command-line tool.

pub mod check;
pub mod config;
pub mod runner;
pub mod svg;

pub use config::{ConfigError, ScenarioConfig};
pub use runner::{run_grasping, run_reaching, run_simulation, OutputDir, RunError, RunOptions};
