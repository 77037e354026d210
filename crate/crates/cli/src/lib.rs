//! Command line layer of the toolkit: configuration merging, the five
//! commands as library functions, and exit-code policy.
//!
//! Everything the binary does is reachable from here, so integration tests
//! can drive commands in-process and assert on their typed outcomes.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

pub use cli::{run, Cli};
pub use config::RunConfig;
pub use error::CliError;
