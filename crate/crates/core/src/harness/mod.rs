//! Declarative experiment scenarios.
//!
//! A run is described by an [`ExperimentConfig`] (usually read from TOML),
//! validated up front, and produces a [`RunReport`] holding every check,
//! bound report, distance estimate and table. Nothing is written to disk
//! until [`RunReport::write`] is called.

mod config;
mod report;
mod scenarios;

pub use config::*;
pub use report::*;

use crate::Result;

/// Validate `config` and run its scenario.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let mut report = RunReport::new(config);
    scenarios::run_scenario(config, &mut report)?;
    Ok(report)
}
