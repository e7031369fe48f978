use std::fs;
use std::process::ExitCode;

use clap::Parser;
use rqsvt_cli::{init_threads, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    init_threads()?;
    let text = run(&cli.command)?.render();
    match cli.command.out() {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
