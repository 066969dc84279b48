//! `leibniz`: simulate and verify Leibniz systems from the catalog or from
//! system definition files.
//!
//! Exit codes: 0 success or check passed, 1 check failed, 2 usage or input
//! error, 3 numerical failure. Errors are reported as JSON on stderr.

mod args;
mod check;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(leibniz::Error),
    Io(String),
}

impl From<leibniz::Error> for Failure {
    fn from(e: leibniz::Error) -> Failure {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Core(e) if e.is_numerical() => "numerical",
            Failure::Core(_) => "input",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

/// Outcome of a successful command: whether every check passed.
pub type Outcome = Result<bool, Failure>;

fn report_failure(f: &Failure) -> ExitCode {
    let body = json!({ "error": f.kind(), "message": f.message() });
    eprintln!("{body}");
    ExitCode::from(f.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return report_failure(&Failure::Usage(e.to_string().trim_end().to_string()));
        }
    };
    let jobs = cli.jobs;
    let run = move || match cli.command {
        Command::List(a) => commands::list(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Check(a) => check::run(&a),
        Command::Reduce(a) => commands::reduce(&a),
        Command::Constrain(a) => commands::constrain(&a),
    };
    let outcome = match jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Failure::Io(e.to_string())),
        },
        None => run(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => report_failure(&f),
    }
}
