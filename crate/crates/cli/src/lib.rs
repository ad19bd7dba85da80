//! Configuration, orchestration and artifact writing for the `maxplus`
//! command-line tool.
//!
//! Commands: `solve` (value-function approximation), `residual` (solve plus
//! Hamiltonian residual on a grid slice), `prune-bench` (all pruners on one
//! propagated set) and `scaling` (approximation-error decay for semiconvex
//! test functions).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command};
pub use config::{parse_config, serialize_config, RunConfig};
pub use error::CliError;
