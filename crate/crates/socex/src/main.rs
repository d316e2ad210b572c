use std::process::ExitCode;

use clap::Parser;
use socex::cli::Cli;

fn main() -> ExitCode {
    Cli::parse().run()
}
