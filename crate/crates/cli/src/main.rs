use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cmu_cli::Cli::parse();
    match cmu_cli::run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.code, e.message);
            ExitCode::FAILURE
        }
    }
}
