//! `atv`: compute TV, relative entropy and adapted total variation between
//! process laws stored as JSON, run randomized inequality sweeps, and write
//! the Bernoulli tightness table as CSV.

mod commands;
mod error;
mod spec_file;

use std::path::PathBuf;
use std::process::ExitCode;

use atv_core::lp::DEFAULT_MAX_VARS;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{ComputeArgs, FamilyArg, Method, Metric, VerifyArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "atv", version, about = "Adapted total variation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one metric between two process files.
    Compute {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        /// Ignored for tv and kl.
        #[arg(long, value_enum, default_value = "recursive")]
        method: Method,
        /// Include per-stage contributions (atv with recursive, kl).
        #[arg(long)]
        breakdown: bool,
        /// Variable cap for the LP method.
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every property check on a seeded ensemble of random pairs.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Horizon; rotates through 1..=4 when omitted.
        #[arg(long)]
        n: Option<usize>,
        /// Alphabet size at every stage; rotates through 2 and 3 when omitted.
        #[arg(long)]
        alphabet: Option<usize>,
        /// Law family; rotates through the random families when omitted.
        #[arg(long, value_enum)]
        family: Option<FamilyArg>,
        /// Bias used by the bernoulli-eps family.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Probability of forcing a kernel weight to zero.
        #[arg(long, default_value_t = 0.0)]
        zero_fraction: f64,
        /// Slack allowed on the inequality checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Instances with more LP variables skip the LP comparison.
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
        /// Prefix of the reproducer files written on failure.
        #[arg(long, default_value = "verify-failure")]
        reproducer: PathBuf,
    },
    /// Write the Bernoulli tightness table as CSV.
    Tightness {
        #[arg(long, default_value = "1,2,3,4,6")]
        n_list: String,
        /// `geometric:START:END:COUNT` or a comma-separated list.
        #[arg(long, default_value = "geometric:0.25:1e-5:12")]
        eps_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute {
            mu,
            nu,
            metric,
            method,
            breakdown,
            max_vars,
            out,
        } => commands::compute(&ComputeArgs {
            mu: &mu,
            nu: &nu,
            metric,
            method,
            breakdown,
            max_vars,
            out: out.as_deref(),
        }),
        Command::Verify {
            seed,
            count,
            n,
            alphabet,
            family,
            eps,
            zero_fraction,
            tol,
            max_vars,
            reproducer,
        } => commands::verify(&VerifyArgs {
            seed,
            count,
            n,
            alphabet,
            family,
            eps,
            zero_fraction,
            tol,
            max_vars,
            reproducer,
        }),
        Command::Tightness {
            n_list,
            eps_grid,
            out,
        } => {
            let n_list = commands::parse_n_list(&n_list)?;
            let grid = commands::parse_eps_grid(&eps_grid)?;
            commands::tightness(&n_list, &grid, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let message = rendered.trim_start_matches("error: ").trim_end();
            let err = CliError::Usage(message.to_string());
            eprintln!("error: {err}");
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
