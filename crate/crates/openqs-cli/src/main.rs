//! Command-line front end: scenario runner with CSV/JSON emission.
//!
//! Exit codes: 0 success, 2 validation/config error, 3 numerical failure.

mod scenarios;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use openqs::OqsError;

#[derive(Parser)]
#[command(
    name = "openqs",
    about = "Open-quantum-system dynamics: exact, stochastic, and master-equation routes",
    version
)]
struct Cli {
    /// Base RNG seed for every sampling scenario.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker-thread cap (falls back to OPENQS_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Output format where a scenario supports both.
    #[arg(long, global = true, value_parser = ["csv", "json"], default_value = "csv")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate dU/dt = -iH(t)U and emit matrix entries vs time (CSV).
    Propagate(scenarios::PropagateArgs),
    /// Stochastic qubit map: Monte-Carlo sample average or super-cumulant
    /// truncation; CSV of t, map entries, |W|.
    Stochastic(scenarios::StochasticArgs),
    /// Exact reduced dynamics of an SE model; CSV of t and ρ_S(t) entries.
    Exact(scenarios::ExactArgs),
    /// Joint quasi-probability tensor of an SE model at fixed times (JSON).
    Quasiprob(scenarios::QuasiprobArgs),
    /// Davies generator, rates, spectrum, and H-curve report (JSON).
    Davies(scenarios::DaviesArgs),
    /// Surrogate-field verdict (JSON) and optional measurement samples (CSV).
    Surrogate(scenarios::SurrogateArgs),
    /// Run two pipelines on one model and emit their divergence vs time.
    Compare(scenarios::CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("OPENQS_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("openqs: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::Propagate(args) => scenarios::run_propagate(args, &cli.format, &cli.out),
        Command::Stochastic(args) => {
            scenarios::run_stochastic(args, cli.seed, &cli.format, &cli.out)
        }
        Command::Exact(args) => scenarios::run_exact(args, &cli.format, &cli.out),
        Command::Quasiprob(args) => scenarios::run_quasiprob(args, &cli.out),
        Command::Davies(args) => scenarios::run_davies(args, &cli.out),
        Command::Surrogate(args) => scenarios::run_surrogate(args, cli.seed, &cli.out),
        Command::Compare(args) => scenarios::run_compare(args, cli.seed, &cli.format, &cli.out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("openqs: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &scenarios::CliError) -> u8 {
    match err {
        scenarios::CliError::Io(_) | scenarios::CliError::Config(_) => 2,
        scenarios::CliError::Oqs(inner) => match inner {
            OqsError::SingularSolve(_)
            | OqsError::EigenFailure
            | OqsError::NonFinite
            | OqsError::HorizonTooShort { .. }
            | OqsError::ZeroProbabilityBranch(_) => 3,
            _ => 2,
        },
    }
}
