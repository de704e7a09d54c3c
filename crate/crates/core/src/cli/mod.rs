//! The `kbbm` command line: configuration, run execution, artifacts and the
//! run manifest.

mod commands;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use commands::{execute, RunOutcome};
pub use config::{
    apply_override, build_datum, load_config, parse_config, resolve_coefficients,
    AnalyticityConfig, Campaign, CheckThresholds, CoefficientConfig, EstimatesConfig, GridConfig,
    InitialDatum, PicardConfig, Resolved, RunConfig, SolverConfig,
};
pub use output::{
    output_root, Artifact, Check, CheckStatus, RunManifest, Staging, Summary, OUTPUT_ROOT_ENV,
};
pub use sweep::{expand_grid, parse_vary, run_sweep, SweepEntry, SweepReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Integrate with IFRK4; radius tracking when [analyticity] is present.
    Simulate,
    /// Solve the Duhamel fixed point by Picard iteration.
    Picard,
    /// Track the analyticity radius and its bounds.
    Radius,
    /// Run the randomized estimate campaigns.
    Estimates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Picard => "picard",
            Command::Radius => "radius",
            Command::Estimates => "estimates",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kbbm",
    version,
    about = "Fifth-order KdV-BBM solver and analyticity diagnostics"
)]
pub struct Cli {
    /// Directory run folders are created under [default: $KBBM_OUTPUT_ROOT, else .]
    #[arg(long, global = true, value_name = "DIR")]
    pub output_root: Option<PathBuf>,
    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Integrate with IFRK4; radius tracking when [analyticity] is present.
    Simulate(RunArgs),
    /// Solve the Duhamel fixed point by Picard iteration.
    Picard(RunArgs),
    /// Track the analyticity radius and its bounds.
    Radius(RunArgs),
    /// Run the randomized estimate campaigns.
    Estimates(RunArgs),
    /// Run one command over the cross product of parameter lists.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    /// Override a config value, e.g. --set solver.dt=1e-3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub command: Command,
    /// Parameter list, e.g. --vary grid.n_modes=128,256 (repeatable).
    #[arg(long = "vary", value_name = "KEY=V1,V2,...", required = true)]
    pub vary: Vec<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let root = output_root(cli.output_root.as_deref());
    let (command, args) = match cli.action {
        Action::Simulate(a) => (Command::Simulate, a),
        Action::Picard(a) => (Command::Picard, a),
        Action::Radius(a) => (Command::Radius, a),
        Action::Estimates(a) => (Command::Estimates, a),
        Action::Sweep(a) => return run_sweep_cli(a, &root),
    };
    let outcome = load_config(&args.config, &args.set).and_then(|cfg| {
        println!("[{}] {}", command.name(), args.config.display());
        execute(command, &cfg, &root)
    });
    match outcome {
        Ok(o) => {
            for c in &o.manifest.checks {
                println!("{c}");
            }
            let s = &o.manifest.summary;
            println!(
                "[{}] wrote {} ({} pass, {} fail, {} info)",
                command.name(),
                o.dir.display(),
                s.pass,
                s.fail,
                s.info
            );
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_sweep_cli(a: SweepArgs, root: &std::path::Path) -> i32 {
    let text = match std::fs::read_to_string(&a.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", a.config.display());
            return EXIT_CONFIG;
        }
    };
    match run_sweep(&text, &a.set, &a.vary, a.command, root) {
        Ok(report) => {
            for e in &report.entries {
                println!(
                    "[sweep] run {:03} {} -> {}{}",
                    e.index,
                    e.overrides.join(" "),
                    e.status,
                    e.error
                        .as_deref()
                        .map(|m| format!(": {m}"))
                        .unwrap_or_default()
                );
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
