//! `mbr`: batch hypothesis selection and estimator diagnostics.
//!
//! Subcommands: `select` runs the decision rules over ingested sample
//! files, `divergence` reports per-pool divergences, `simulate-zipf` and
//! `sweep` drive the simulation studies, and `toylm` exposes the toy model
//! directly. Exit code 0 on success, 1 on input errors, 2 when an internal
//! invariant is violated.

mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mbr", version, about = "Minimum Bayes Risk decision rules over sampled hypothesis pools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select hypotheses from sample files under one or more decision rules.
    Select(commands::SelectArgs),
    /// Report KL and JS divergences of both estimators for every pool.
    Divergence(commands::DivergenceArgs),
    /// Run the Zipf estimator study.
    #[command(name = "simulate-zipf")]
    SimulateZipf(commands::ZipfArgs),
    /// Divergence or quality sweeps over toy models.
    Sweep(commands::SweepArgs),
    /// Sample from, enumerate, or score a toy model.
    #[command(subcommand)]
    Toylm(commands::ToylmCommand),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(args) => commands::run_select(args),
        Command::Divergence(args) => commands::run_divergence(args),
        Command::SimulateZipf(args) => commands::run_zipf(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Toylm(command) => commands::run_toylm(command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

/// Input problems exit 1; violations of engine invariants exit 2.
fn exit_code_for(error: &anyhow::Error) -> u8 {
    use mbr_core::decoder::DecodeError;
    use mbr_core::utility::UtilityError;
    use mbr_core::weights::WeightError;

    for cause in error.chain() {
        if let Some(weight_error) = cause.downcast_ref::<WeightError>() {
            match weight_error {
                WeightError::NegativeWeight(_) | WeightError::NotNormalized(_) => return 2,
                WeightError::DegenerateWeights => return 1,
            }
        }
        if cause.downcast_ref::<UtilityError>().is_some() {
            return 2;
        }
        if let Some(decode_error) = cause.downcast_ref::<DecodeError>() {
            match decode_error {
                DecodeError::Shape(_) | DecodeError::WeightMismatch { .. } => return 2,
                _ => return 1,
            }
        }
    }
    1
}
