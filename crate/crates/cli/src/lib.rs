//! Command-line front end: file inputs, deterministic JSON reports and CSV
//! plot data for the `vxr-core` analyses.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use args::{Cli, Command};
pub use commands::{cmd_analyze, cmd_decompose, cmd_invariant, cmd_planes, cmd_rasterize};
pub use config::{RunConfig, Tolerances};
pub use error::{CliError, Result};

/// Runs one subcommand; the caller maps errors to exit codes.
pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Rasterize(a) => cmd_rasterize(&RunConfig::from_args(a)?).map(drop),
        Command::Invariant(a) => cmd_invariant(&RunConfig::from_args(a)?).map(drop),
        Command::Analyze(a) => cmd_analyze(&RunConfig::from_args(a)?).map(drop),
        Command::Planes(a) => cmd_planes(&RunConfig::from_args(a)?).map(drop),
        Command::Decompose(a) => cmd_decompose(&RunConfig::from_args(a)?).map(drop),
    }
}
