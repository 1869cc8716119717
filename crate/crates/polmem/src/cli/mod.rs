//! Experiment runner: config parsing, deterministic seeding, CSV/JSON
//! emission, and the exit-code contract.
//!
//! Command shape: `polmem run <experiment> --config <path> [--seed S]
//! [--out DIR] [--engine exact|bosonic]`. Every run writes a CSV with
//! per-experiment columns and a JSON summary that echoes every consumed
//! parameter; identical config and seed produce byte-identical
//! summaries.
//!
//! Exit codes: 0 all assertions pass, 2 config error, 3 numerical
//! assertion failure, 4 resource cap exceeded.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "polmem",
    version,
    about = "Collective-excitation quantum memory simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one experiment from a TOML config file.
    Run {
        /// Experiment name (e.g. loss-scan, motion-mc).
        experiment: String,
        /// Path to the TOML configuration.
        #[arg(long)]
        config: PathBuf,
        /// Master seed override for stochastic experiments.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the CSV and JSON files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Engine override where an experiment supports both.
        #[arg(long)]
        engine: Option<String>,
    },
}

/// Engine selector for experiments that run on either representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Exact,
    Bosonic,
}

impl Engine {
    pub fn parse(name: &str) -> crate::Result<Self> {
        match name {
            "exact" => Ok(Engine::Exact),
            "bosonic" => Ok(Engine::Bosonic),
            other => Err(Error::ConfigInvalid(format!(
                "unknown engine '{other}' (expected 'exact' or 'bosonic')"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Bosonic => "bosonic",
        }
    }
}

/// Map an error to the contract exit code.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigInvalid(_)
        | Error::UnknownScenario(_)
        | Error::SeedMissing
        | Error::InvalidArgument(_)
        | Error::Io(_) => EXIT_CONFIG,
        Error::DimensionOverflow { .. }
        | Error::ExcitationOverflow { .. }
        | Error::CutoffExceeded(_)
        | Error::CutoffLoss(_)
        | Error::CutoffWarning { .. } => EXIT_RESOURCE,
        Error::SectorMismatch { .. }
        | Error::DimensionMismatch(_)
        | Error::ZeroProbability
        | Error::StepTooLarge(_)
        | Error::SingularSchedule { .. } => EXIT_ASSERTION,
    }
}

/// Top-level driver; returns the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            experiment,
            config,
            seed,
            out,
            engine,
        } => {
            let out_dir = out.unwrap_or_else(|| PathBuf::from("."));
            match experiments::run(&experiment, &config, seed, &out_dir, engine.as_deref()) {
                Ok(summary) => {
                    let failed: Vec<&output::Assertion> =
                        summary.assertions.iter().filter(|a| !a.passed).collect();
                    if failed.is_empty() {
                        EXIT_OK
                    } else {
                        for a in failed {
                            eprintln!("assertion failed: {}: {}", a.name, a.detail);
                        }
                        EXIT_ASSERTION
                    }
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    exit_code_for(&err)
                }
            }
        }
    }
}
