//! Scenario parsing and the `blowup` subcommands.

pub mod commands;
pub mod report;
pub mod scenario;

pub use commands::{Output, Status, Vary};
pub use scenario::{Scenario, ScenarioError};
