mod args;
mod commands;
mod document;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

const THREADS_VAR: &str = "BERNCONV_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = std::env::var(THREADS_VAR).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = commands::run(cli.command);
    let mut out = std::io::stdout().lock();
    if out.write_all(outcome.text.as_bytes()).and_then(|_| out.flush()).is_err() {
        return ExitCode::from(report::EXIT_INPUT);
    }
    ExitCode::from(outcome.code)
}
