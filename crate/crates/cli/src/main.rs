use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = coinsert_cli::Cli::parse();
    match coinsert_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
