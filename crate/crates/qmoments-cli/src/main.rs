use std::process::ExitCode;

use clap::Parser;
use qmoments_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => {
            eprintln!("qmoments: run truncated; partial outputs written");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("qmoments: {e}");
            ExitCode::from(e.code)
        }
    }
}
