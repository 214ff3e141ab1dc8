//! Command-line front end for joint estimation of related Gaussian graphical
//! models: simulate scenarios, fit MCMC chains, select and export networks,
//! evaluate against ground truth, and check convergence.
//!
//! Exit codes: 0 on success, 2 for configuration/input errors, 3 when the
//! sampler aborts numerically.

mod commands;
mod config;
mod summary;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ggmlink",
    version,
    about = "Joint Bayesian inference of related Gaussian graphical models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic multi-group scenarios (data + ground truth).
    Simulate(commands::simulate::SimulateArgs),
    /// Run MCMC chains on per-group data CSVs.
    Fit(commands::fit::FitArgs),
    /// Pool chains, select the median model, and export networks.
    Select(commands::select::SelectArgs),
    /// Score summaries or external edge lists against ground truth.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Convergence diagnostics across chains.
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Re-emit networks from an existing summary.
    Export(commands::export::ExportArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Select(args) => commands::select::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Diagnose(args) => commands::diagnose::run(args),
        Command::Export(args) => commands::export::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

/// 3 for numerical aborts inside the sampler, 2 for everything else
/// (configuration, input, and I/O problems).
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if matches!(
            cause.downcast_ref::<ggmlink::Error>(),
            Some(ggmlink::Error::NumericalAbort { .. })
        ) {
            return 3;
        }
    }
    2
}
