use std::process::ExitCode;

use clap::Parser;
use dotdop::cli::{run_cli, Cli};

fn main() -> ExitCode {
    run_cli(Cli::parse())
}
