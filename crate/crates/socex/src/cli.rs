use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{self, Format, Report};
use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "socex", version, about = "Explore/exploit recommendation mechanisms on visibility graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print a one-line verdict to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exploration partition table for the configured laws.
    Partition {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo replications, one row per run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Incentive audit: exact and/or Monte Carlo posteriors per information set.
    Audit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid over N and the (alpha, beta) lattice.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reproduces the four canned incentive failures.
    DemoFailures,
    /// Per-run phase-length bound checks.
    CheckBounds {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Cli {
    fn load(&self, path: &std::path::Path) -> CliResult<Config> {
        let mut cfg = Config::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn execute(&self) -> CliResult<Report> {
        let f = self.format;
        match &self.command {
            Command::Partition { config } => commands::partition(&self.load(config)?, f),
            Command::Simulate { config } => commands::simulate(&self.load(config)?, f),
            Command::Audit { config } => commands::audit(&self.load(config)?, f),
            Command::Sweep { config } => commands::sweep(&self.load(config)?, f),
            Command::DemoFailures => commands::demo_failures(f),
            Command::CheckBounds { config } => commands::check_bounds(&self.load(config)?, f),
        }
    }

    fn emit(&self, report: &Report) -> CliResult<()> {
        match &self.out {
            Some(path) => std::fs::write(path, &report.text)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source }),
            None => {
                print!("{}", report.text);
                Ok(())
            }
        }
    }

    /// 0 on success, 1 when an assertion failed, 2 on configuration errors.
    pub fn run(&self) -> ExitCode {
        match self.execute().and_then(|r| self.emit(&r).map(|()| r)) {
            Ok(report) => {
                if self.verbose {
                    eprintln!("socex: {}", if report.ok { "all checks passed" } else { "check failed" });
                }
                if report.ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("socex: {e}");
                e.exit_code()
            }
        }
    }
}
