//! `cms`: command-line front end for the countable Markov shift toolkit.

mod commands;
mod config;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{Command, Status};

#[derive(Parser, Debug)]
#[command(
    name = "cms",
    version,
    about = "Invariant measures and pressure on countable Markov shifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Top,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the per-n table as CSV here, when the command has one.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Top {
    #[command(flatten)]
    Command(Command),
    /// Run an experiment config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<Status> {
    let command = match cli.command {
        Top::Command(c) => c,
        Top::Run { config } => {
            let args = config::resolve(&config)?;
            let inner = Cli::try_parse_from(args)?;
            if matches!(inner.command, Top::Run { .. }) {
                anyhow::bail!("{}: a config cannot run another config", config.display());
            }
            return execute(Cli {
                out: cli.out.or(inner.out),
                csv: cli.csv.or(inner.csv),
                command: inner.command,
            });
        }
    };
    let outcome = commands::run(&command)?;
    let text = output::to_json(&outcome.report)?;
    match &cli.out {
        Some(path) => output::write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &cli.csv {
        match &outcome.table {
            Some(t) => output::write_atomic(path, &t.to_csv())?,
            None => eprintln!(
                "cms: this command has no table; {} not written",
                path.display()
            ),
        }
    }
    if outcome.status == Status::Refused {
        eprintln!("cms: refused or undecided");
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Refused) => ExitCode::from(2),
        Err(e) => {
            eprintln!("cms: error: {e:#}");
            ExitCode::from(1)
        }
    }
}
