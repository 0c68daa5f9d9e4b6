//! `imb-lab`: command-line front end for imb-core.

mod commands;
mod config;
mod output;
mod svg;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure:\n{0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = RunConfig::resolve(&cli.common).and_then(|cfg| commands::run(&cfg, &cli.command));
    match result {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("imb-lab {}: {e}", cli.command.name());
            ExitCode::from(e.code())
        }
    }
}
