use std::process::ExitCode;

use clap::Parser;
use trackbc::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("trackbc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
