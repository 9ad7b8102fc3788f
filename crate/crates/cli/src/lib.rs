//! Command-line front end for `cddsim`: configuration, single runs, coupling
//! sweeps, contour grids, turning-point maps and result emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod output;
pub mod runner;

use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, Format, RunConfig, SweepGrid};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Simulation(#[from] cddsim_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    /// Process exit status: 2 configuration, 3 simulation or output,
    /// 4 budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(cddsim_core::Error::BudgetExceeded(_)) => 4,
            CliError::Simulation(_) | CliError::Io(_) | CliError::Output(_) => 3,
        }
    }
}
