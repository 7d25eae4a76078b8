//! Batch front end for the SINR scheduling simulator: config parsing,
//! scenario generation, ρ sweeps with CSV/SVG output, and a property report.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod verify;

pub use config::{parse_config, parse_config_str, Config, Overrides};
pub use error::CliError;
pub use manifest::RunManifest;
