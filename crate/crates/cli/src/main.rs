mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command};
use clap::Parser;
use commands::CliError;
use std::process::ExitCode;

/// Worker count: the --threads flag (or all cores), capped by IRONFACE_THREADS.
fn worker_count(flag: Option<usize>) -> Result<usize, CliError> {
    let mut n = flag.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if let Ok(v) = std::env::var("IRONFACE_THREADS") {
        let cap: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("IRONFACE_THREADS must be a positive integer, got `{v}`")))?;
        n = n.min(cap.max(1));
    }
    Ok(n.max(1))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let workers = worker_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Ed(a) => commands::ed(a),
        Command::Thermo(a) => commands::thermo(a),
        Command::Corr(a) => commands::corr(a),
        Command::Scan(a) => commands::scan(a),
        Command::Fss(a) => commands::fss(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
