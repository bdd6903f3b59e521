use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use srtlab::cli::{execute, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match execute(cli, &mut out) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
