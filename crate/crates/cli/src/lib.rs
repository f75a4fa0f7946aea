//! Command-line front end: ingest a manifest, profile titles, cluster, and
//! emit reports, plots and montages.

pub mod args;
pub mod commands;
pub mod error;
pub mod montage;
pub mod output;
pub mod pipeline;
pub mod plot;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    let dispatch = || -> CliResult<()> {
        match &cli.command {
            Command::Cluster(a) => commands::cluster(a).map(drop),
            Command::Eval(a) => commands::eval(a).map(drop),
            Command::Plot(a) => commands::plot(a).map(drop),
            Command::Montage(a) => commands::montage_cmd(a).map(drop),
            Command::Synth(a) => commands::synth(a),
            Command::Ablate(a) => commands::ablate(a).map(drop),
        }
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(dispatch),
        None => dispatch(),
    }
}

/// Parses the process arguments, runs the command and returns the exit
/// code. Failures print a JSON error object on stderr.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("{}", CliError::Usage(e.kind().to_string()).to_json());
            }
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
