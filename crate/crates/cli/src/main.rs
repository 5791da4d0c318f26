use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flab_cli::{describe_suite, list_suites, load_config, resolve_seed, run_with_threads, write_file, CliError, SEED_ENV};

#[derive(Parser)]
#[command(name = "flab", version, about = "Check suites for point processes under filtration enlargement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a config and write a JSON report.
    Run {
        config: PathBuf,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads for Monte Carlo suites.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List registered suites.
    Suites,
    /// Show a suite's anchor and summary.
    Describe { suite: String },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Suites => {
            print!("{}", list_suites());
            Ok(0)
        }
        Command::Describe { suite } => {
            print!("{}", describe_suite(&suite)?);
            Ok(0)
        }
        Command::Run { config, out, csv, parallel, seed } => {
            let cfg = load_config(&config)?;
            let env = std::env::var(SEED_ENV).ok();
            let seed = resolve_seed(seed, env.as_deref(), cfg.seed)?;
            let report = run_with_threads(&cfg, seed, parallel)?;
            let json = report.to_json();
            match out {
                Some(p) => write_file(&p, json.as_bytes())?,
                None => print!("{json}"),
            }
            if let Some(p) = csv {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write_file(&p, &buf)?;
            }
            eprintln!(
                "{} checks, {} passed, {} failed",
                report.summary.total, report.summary.passed, report.summary.failed
            );
            for c in report.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {} / {}: {}", c.suite, c.name, c.witness.as_deref().unwrap_or(""));
            }
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("flab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
