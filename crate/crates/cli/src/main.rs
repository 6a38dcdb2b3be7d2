use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use contractlab::Limits;
use contractlab_cli::commands::{parse_caps, run, Cli};
use contractlab_cli::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let limits = match std::env::var("CONTRACTLAB_CAP") {
        Ok(text) => parse_caps(&text),
        Err(_) => Ok(Limits::default()),
    };
    match limits.and_then(|l| run(cli, l)) {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.text.as_bytes());
            ExitCode::from(outcome.code)
        }
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
