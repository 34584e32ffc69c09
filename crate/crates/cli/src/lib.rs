//! Scenario files, experiment orchestration and persistence for the SQG
//! solver, plus the `sqg` command-line front end.

pub mod cli;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod scenario;
pub mod store;

pub use error::HarnessError;
pub use manifest::{RunManifest, RunStatus};
pub use pipeline::{run_experiment, Analysis, RunOutcome};
pub use scenario::{load_scenario, parse_scenario, ScenarioSpec};
