use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use nqkd_cli::{execute, Cli, CliError};

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::Output(e.to_string());
    match out {
        Some(path) => std::fs::write(path, text).map_err(err),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(err),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|run| {
        emit(&run.text, run.out.as_deref())?;
        Ok(run.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("nqkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
