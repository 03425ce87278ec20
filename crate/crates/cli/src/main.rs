//! `sections`: command-line experiments on Gaussian section limits.

mod config;
mod error;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

fn write_file(path: &std::path::Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match config::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let output = match run::run(&cli.command) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("sections {}: {e}", cli.command.mode().name());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = output.render();
    let written = match &output.common.out {
        Some(path) => write_file(path, &text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    let side = match &output.side_file {
        Some((path, body)) => write_file(path, body),
        None => Ok(()),
    };
    if let Err(msg) = written.and(side) {
        eprintln!("sections: {msg}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
