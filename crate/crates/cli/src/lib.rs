//! Experiment runner behind the `lraa` binary.

pub mod error;
pub mod presets;
pub mod runner;
pub mod schema;
pub mod summarize;

pub use error::{CliError, Result};
pub use presets::{presets, resolve, Preset, Problem, RunOptions, RunSpec};
pub use runner::{execute, RunOutcome};
pub use schema::{OutputDir, RunSummary, SCHEMA_VERSION};
