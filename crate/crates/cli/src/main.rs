//! `commlab`: seeded experiment runner over the `commlab` library.

mod error;
mod experiments;
mod output;
mod schema;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::experiments::{Config, EXPERIMENTS};

#[derive(Debug, Parser)]
#[command(
    name = "commlab",
    version,
    about = "Seeded simulations of message compression and privacy trade-offs"
)]
#[command(subcommand_negates_reqs = true, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// One of compress-classical, compress-quantum, compress-multiround,
    /// privacy, ersp, eq-entangled, direct-sum, corrector-audit.
    #[arg(long, required = true)]
    experiment: Option<String>,

    /// JSON input file.
    #[arg(long, required = true)]
    input: Option<PathBuf>,

    /// Master seed; every random draw derives from it.
    #[arg(long, required = true)]
    seed: Option<u64>,

    /// Monte Carlo trials.
    #[arg(long, required = true)]
    trials: Option<u64>,

    /// Slack parameter: 0.25 for compress-classical, 0.2 otherwise.
    #[arg(long)]
    delta: Option<f64>,

    /// Directory for `<experiment>.csv` and `<experiment>.json`; without
    /// it the CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an input file and print "ok" or a diagnostic.
    Validate { file: PathBuf },
}

fn read_input(path: &PathBuf) -> Result<schema::InputFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    schema::parse(&text)
}

fn validate(path: &PathBuf) -> Result<(), CliError> {
    let file = read_input(path)?;
    schema::validate(&file)?;
    println!("ok");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let experiment = cli.experiment.expect("required by clap");
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown experiment {experiment:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        )));
    }
    let trials = cli.trials.expect("required by clap");
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if let Some(d) = cli.delta {
        if !(d > 0.0 && d < 1.0) {
            return Err(CliError::Usage(format!("--delta {d} not in (0,1)")));
        }
    }
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let cfg = Config {
        experiment,
        input: cli.input.expect("required by clap"),
        seed: cli.seed.expect("required by clap"),
        trials,
        delta: cli.delta,
    };
    let file = read_input(&cfg.input)?;
    let report = commlab::par::with_threads(cli.threads, || experiments::run(&cfg, &file))?;
    output::emit(&report, cli.out.as_ref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Some(Command::Validate { file }) => validate(file),
        None => run(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
