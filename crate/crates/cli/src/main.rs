//! Command-line front end for the imaginary Toda bootstrap library.
//!
//! Exit codes: 0 on success, 1 when a verify command breaches its
//! tolerance, 2 on flag or job-file parse errors, 3 on domain errors from
//! the library. Every subcommand can also run from a JSON job file via
//! `toda run job.json`; the file holds the same fields as the flags under a
//! `"command"` tag.

mod args;
mod jobs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "toda", version, about = "Imaginary Toda three-point bootstrap toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Upsilon function at a real or exact argument
    Upsilon(jobs::UpsilonArgs),
    /// Conformal weight, W3 charge, and degeneracy class of a momentum
    Weights(jobs::WeightsArgs),
    /// Three-point structure constant with one weight-line field
    StructureConstant(jobs::StructureConstantArgs),
    /// Degeneracy class of a momentum or construction of a spinning field
    Classify(jobs::ClassifyArgs),
    /// Fusion channels of a fully degenerate field
    Fuse(jobs::FuseArgs),
    /// Check the degenerate-shift recursions on seeded random data
    VerifyShift(jobs::VerifyShiftArgs),
    /// Check crossing: connection solve, gluing residuals, transport
    VerifyCrossing(jobs::VerifyCrossingArgs),
    /// Structure-constant scan along an exact coupling line, as CSV
    Sweep(jobs::SweepArgs),
    /// Execute a JSON job file carrying one subcommand's payload
    Run { job: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Upsilon(a) => jobs::run_upsilon(&a),
        Command::Weights(a) => jobs::run_weights(&a),
        Command::StructureConstant(a) => jobs::run_structure_constant(&a),
        Command::Classify(a) => jobs::run_classify(&a),
        Command::Fuse(a) => jobs::run_fuse(&a),
        Command::VerifyShift(a) => jobs::run_verify_shift(&a),
        Command::VerifyCrossing(a) => jobs::run_verify_crossing(&a),
        Command::Sweep(a) => jobs::run_sweep(&a),
        Command::Run { job } => jobs::run_job_file(&job),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
