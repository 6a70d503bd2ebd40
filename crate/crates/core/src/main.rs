use std::process::ExitCode;

use catsoft::cli::{self, Cli, ConfigError};
use clap::Parser;

fn main() -> ExitCode {
    // clap prints help and version itself and exits 0; bad flags exit 2.
    if let Err(e) = Cli::try_parse_from(std::env::args_os()) {
        e.exit();
    }
    let cfg = match cli::parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ConfigError::Usage(msg)) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", cfg.echo());
    match cli::run(&cfg) {
        Ok(status) => {
            for file in &status.files {
                println!("wrote {}", file.display());
            }
            if let Ok(text) = std::fs::read_to_string(cfg.out.join("summary.csv")) {
                print!("{text}");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
