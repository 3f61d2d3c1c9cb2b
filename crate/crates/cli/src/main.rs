use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = tfim_cli::Cli::parse();
    match tfim_cli::run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(tfim_cli::exit_code(&e))
        }
    }
}
