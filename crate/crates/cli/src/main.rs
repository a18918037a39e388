use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "pdsplit",
    version,
    about = "Two-observation image restoration with primal-dual splitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the noisy and blurred observations plus a manifest.
    Degrade(Common),
    /// Restore from the observations and write the image, trace and report.
    Restore(Common),
    /// Run a long solve and write the result as a reference dump.
    Reference(Common),
    /// Print the admissibility report for the configured parameters.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Reference dump: read by `restore`, written by `reference`.
    #[arg(long, value_name = "PATH")]
    reference: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.output {
            c.output = o.clone();
        }
        if let Some(r) = &self.reference {
            c.reference = Some(r.clone());
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Degrade(a) => a.resolve().and_then(|c| commands::degrade(&c)),
        Command::Restore(a) => a.resolve().and_then(|c| commands::restore(&c)),
        Command::Reference(a) => a.resolve().and_then(|c| commands::reference(&c)),
        Command::Validate(a) => a.resolve().and_then(|c| commands::validate(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
