//! Command-line front end: solve one scenario, run the Monte Carlo bench, or
//! dump the candidate set.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use varloc::bench::{self, BenchConfig, Method};
use varloc::majorizer::{build_majorizer, discretize, write_candidates_csv};
use varloc::solver::{oracle_grid, DEFAULT_GRID};
use varloc::{Error, Estimate, Scenario};

const SEED_ENV: &str = "VARLOC_SEED";

#[derive(Parser)]
#[command(name = "varloc", version, about = "Robust percentile target localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the target of one scenario and print the estimate as JSON.
    Solve {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Rpte)]
        method: Method,
        /// Samples per curve of the candidate set.
        #[arg(long = "grid", default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Also run the dense lattice search with this pitch (km).
        #[arg(long = "oracle", value_name = "H")]
        oracle: Option<f64>,
    },
    /// Run the Monte Carlo comparison and write trials.csv and summary.csv.
    Bench {
        /// Configuration JSON; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
    /// Write the discretized candidate set of a scenario as CSV.
    Candidates {
        scenario: PathBuf,
        #[arg(long = "grid", default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(flatten)]
    estimate: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<Estimate>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Solve {
            scenario,
            method,
            grid,
            oracle,
        } => {
            let scenario = Scenario::from_json_file(&scenario)?;
            let estimate = method.run(&scenario, grid)?;
            let oracle = oracle.map(|h| oracle_grid(&scenario, h)).transpose()?;
            println!("{}", serde_json::to_string_pretty(&SolveOutput { estimate, oracle })?);
        }
        Command::Bench { config, out } => {
            let mut cfg = match config {
                Some(path) => BenchConfig::from_json_file(path)?,
                None => BenchConfig::default(),
            };
            if let Ok(seed) = std::env::var(SEED_ENV) {
                cfg.seed = seed
                    .trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("{SEED_ENV}={seed:?}: {e}")))?;
            }
            cfg.validate()?;
            let records = bench::run_monte_carlo(&cfg)?;
            let report = bench::emit_report(&records, &out)?;
            print!("{}", bench::format_summary_table(&report.summary));
            eprintln!(
                "wrote {} and {}",
                report.trials_csv.display(),
                report.summary_csv.display()
            );
        }
        Command::Candidates { scenario, grid, out } => {
            let scenario = Scenario::from_json_file(&scenario)?;
            let set = build_majorizer(&scenario);
            for skipped in &set.skipped_pairs {
                eprintln!("warning: skipped pair ({}, {}): {}", skipped.i, skipped.j, skipped.reason);
            }
            let candidates = discretize(&set, grid)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    write_candidates_csv(std::io::BufWriter::new(file), &candidates)
                        .map_err(|e| Error::Io { path, source: e })?;
                }
                None => write_candidates_csv(std::io::stdout().lock(), &candidates)
                    .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })?,
            }
        }
    }
    Ok(())
}
