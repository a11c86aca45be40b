mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use orbita::OrbitaError;

/// An error carrying the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

#[derive(Debug, Parser)]
#[command(name = "orbita", version, about = "Time maps, invariant tori and periodic orbits of planar central force problems")]
struct Cli {
    /// Worker threads (ORBITA_THREADS takes precedence)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate T, Θ, their derivatives and D over an (H, L) grid as CSV
    Scan(commands::ScanArgs),
    /// Solve for the (H, L) of an (n, k) torus
    FindTorus(commands::FindTorusArgs),
    /// Integrate a stored torus orbit and check closure and winding
    Verify(commands::VerifyArgs),
    /// Periodic orbits of the uniformly driven problem near a torus
    Continue(commands::ContinueArgs),
    /// Periodic orbits of the restricted three-body problem
    R3b(commands::R3bArgs),
    /// Circular-orbit limits of the time maps
    Limits(commands::LimitsArgs),
    /// Describe a potential and, optionally, its circular orbit
    PotentialInfo(commands::PotentialInfoArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return f.code;
    }
    match err.downcast_ref::<OrbitaError>() {
        Some(OrbitaError::Parameter(_) | OrbitaError::Domain { .. } | OrbitaError::Order(_)) => 2,
        Some(
            OrbitaError::NoMinimum(_)
            | OrbitaError::DegenerateCenter(_)
            | OrbitaError::Inadmissible { .. }
            | OrbitaError::InadmissibleRatio { .. },
        ) => 3,
        Some(_) => 4,
        None => 2,
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("ORBITA_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().with_context(|| format!("ORBITA_THREADS = {v:?} is not a count"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            anyhow::bail!("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Scan(a) => commands::scan(a),
        Command::FindTorus(a) => commands::find_torus_cmd(a),
        Command::Verify(a) => commands::verify(a),
        Command::Continue(a) => commands::continue_cmd(a),
        Command::R3b(a) => commands::r3b(a),
        Command::Limits(a) => commands::limits(a),
        Command::PotentialInfo(a) => commands::potential_info(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
