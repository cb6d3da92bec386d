//! Scenario runner for the `swarmhydro` solver.
//!
//! ```text
//! swarmhydro simulate --config run.toml --out results/
//! swarmhydro steady   --config barenblatt.toml
//! swarmhydro verify   --config run.toml hypotheses energy
//! swarmhydro sweep    --config run.toml --parameter eps --values 1e-2,1e-3,1e-4 --workers 3
//! ```

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "swarmhydro", version, about = "Damped viscous swarming hydrodynamics with nonlocal forces")]
pub struct Cli {
    /// Scenario file (TOML). Without it the built-in defaults are used.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time integration with energy ledger and snapshots.
    Simulate,
    /// Stationary density with the configured mass.
    Steady,
    /// Diagnostics: hypotheses, energy, com, tail, renormalized (all when none given).
    Verify { checks: Vec<String> },
    /// Repeat the scenario over values of one parameter.
    Sweep {
        /// eps, delta, n or cfl; defaults to `sweep.parameter`.
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated values; defaults to `sweep.values`.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

/// Executes a parsed command line and returns the text printed on success.
pub fn run(cli: &Cli) -> Result<String> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let out = cli.out.as_path();
    let json = match &cli.command {
        Command::Simulate => serde_json::to_string_pretty(&commands::simulate(&cfg, Some(out))?.summary)?,
        Command::Steady => serde_json::to_string_pretty(&commands::steady(&cfg, Some(out))?.0)?,
        Command::Verify { checks } => serde_json::to_string_pretty(&commands::verify(&cfg, checks, Some(out))?)?,
        Command::Sweep { parameter, values } => {
            let parameter = parameter.clone().unwrap_or_else(|| cfg.sweep.parameter.clone());
            let values = values.clone().unwrap_or_else(|| cfg.sweep.values.clone());
            serde_json::to_string_pretty(&commands::sweep(&cfg, &parameter, &values, cli.workers, out)?)?
        }
    };
    Ok(json)
}
