//! `driftlab`: coefficients, designed dipoles, simulations and drift
//! experiments from the command line.
//!
//! Exit codes: 0 success, 1 malformed input or I/O failure, 2 refusal
//! because the hypotheses fail, 3 a numerical tolerance was not met.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use output::Workdir;

pub const WORKERS_ENV: &str = "DRIFTLAB_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "driftlab", version, about = "Quadratic drift experiments for the bilinear Schrödinger equation")]
struct Cli {
    /// Every relative path is resolved against this directory.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    /// Worker threads for parallel sweeps; DRIFTLAB_WORKERS takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coupling table, A^p_K by every applicable route, T*, hypothesis checks.
    Coeffs(commands::CoeffsArgs),
    /// Construct a dipole with prescribed coefficients.
    DesignMu(commands::DesignArgs),
    /// Galerkin trajectory of a configured run.
    Simulate(commands::ConfigArgs),
    /// Lost-direction drift against the quadratic prediction over an ε ladder.
    Drift(commands::ConfigArgs),
    /// Random sweep of the coercivity inequality.
    Coercivity(commands::CoercivityArgs),
    /// Integration-by-parts identity on an exact kernel.
    IbpCheck(commands::IbpArgs),
    /// Finite-dimensional example: trajectory, a¹_K, T* and drift ratio.
    OdeDemo(commands::OdeArgs),
}

fn env_workers() -> Result<Option<usize>, error::CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .map(Some)
            .ok_or_else(|| error::CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    let ctx = Ctx {
        wd: Workdir::new(cli.workdir),
        env_workers: env_workers()?,
        flag_workers: cli.workers,
    };
    match &cli.command {
        Command::Coeffs(a) => commands::coeffs(&ctx, a),
        Command::DesignMu(a) => commands::design(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Drift(a) => commands::drift(&ctx, a),
        Command::Coercivity(a) => commands::coercivity(&ctx, a),
        Command::IbpCheck(a) => commands::ibp_check(&ctx, a),
        Command::OdeDemo(a) => commands::ode_demo(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftlab: {e}");
            e.exit_code()
        }
    }
}
