use std::process::ExitCode;

use biexciton::cli::{self, Cli};
use clap::Parser;

fn main() -> ExitCode {
    cli::main_with(Cli::parse())
}
