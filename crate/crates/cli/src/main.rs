mod args;
mod commands;
mod range;
mod settings;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use comd_core::Error;

use args::{Cli, Command};
use settings::Settings;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(Error::NotConverged { .. } | Error::DegenerateModes { .. } | Error::Diverged { .. }) => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let mut settings = Settings::load(cli.config.as_deref()).map_err(Failure::Usage)?;
    if let Some(seed) = cli.seed {
        settings.seed = Some(seed);
    }
    if !matches!(cli.command, Command::Bench(_)) {
        // only bench fans out; keep everything else on one thread
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(a, settings.seed),
        Command::Decompose(a) => commands::decompose_cmd(a, settings),
        Command::Gram(a) => commands::gram_cmd(a),
        Command::SelectK(a) => commands::select_k(a, settings),
        Command::Bench(a) => commands::bench(a, settings),
        Command::SnrSweep(a) => commands::snr_sweep(a, settings),
        Command::ExportForPredictor(a) => commands::export(a, settings),
    }
}

pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
