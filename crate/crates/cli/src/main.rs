//! `mimo-decay`: decay oracle, pigeonhole witnesses and bound reports for
//! lattice codes on the multiple-access MIMO channel.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage, 3 schema, 4 budget
//! refusal, 5 I/O.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mimo-decay", version, about = "Decay functions and pigeonhole witnesses for MIMO-MAC lattice codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the ensemble comes from: a lattice spec file or generator parameters.
#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Lattice spec JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Number of users.
    #[arg(long = "U")]
    pub users: Option<usize>,
    /// Rows per codeword.
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns per codeword (channel uses).
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for the generator and for sampled searches.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; `.json` selects JSON, anything else the default format.
    /// Without it the result goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random full-rank ensemble as a lattice spec.
    Gen {
        #[arg(long = "U")]
        users: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Window bound stored for every user.
        #[arg(long = "N", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        bound: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact decay function by enumeration, one CSV row per N.
    Decay {
        #[command(flatten)]
        source: Source,
        /// Comma-separated window bounds.
        #[arg(long = "N", required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
        grid: Vec<u64>,
        /// Maximum number of tuples enumerated per N.
        #[arg(long, default_value_t = mimo_decay::DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Pigeonhole witnesses, one per N, as a JSON array.
    Witness {
        #[command(flatten)]
        source: Source,
        #[arg(long = "N", required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
        grid: Vec<u64>,
        /// Lattice points examined per search level.
        #[arg(long, default_value_t = commands::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Witness per N compared with the exact oracle on the witness's windows.
    Report {
        #[command(flatten)]
        source: Source,
        #[arg(long = "N", required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
        grid: Vec<u64>,
        /// Search budget per level; the oracle uses `--oracle-budget`.
        #[arg(long, default_value_t = commands::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = mimo_decay::DEFAULT_ENUMERATION_BUDGET)]
        oracle_budget: u64,
        /// Skip witnesses and report the oracle on the nominal windows only.
        #[arg(long)]
        oracle_only: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Randomized checks of the row-reduction identity and of the bounded
    /// projected basis.
    VerifyLemmas {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative tolerance of the determinant identity.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Ambient dimension cap for the projection suite.
        #[arg(long, default_value_t = 12)]
        max_dim: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { users, n, k, seed, bound, output } => commands::gen(users, n, k, seed, bound, &output),
        Command::Decay { source, grid, budget, output } => commands::decay(&source, &grid, budget, &output),
        Command::Witness { source, grid, budget, output } => commands::witness(&source, &grid, budget, &output),
        Command::Report { source, grid, budget, oracle_budget, oracle_only, output } => {
            commands::report(&source, &grid, budget, oracle_budget, oracle_only, &output)
        }
        Command::VerifyLemmas { trials, seed, tol, max_dim, output } => {
            commands::verify_lemmas(trials, seed, tol, max_dim, &output)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mimo-decay: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}

impl Source {
    pub fn load(&self) -> Result<mimo_decay::CodeEnsemble, CliError> {
        commands::load_source(self)
    }
}
