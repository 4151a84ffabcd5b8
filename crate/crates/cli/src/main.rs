mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::{run, Cli};

/// Failure surfaced to the user as `error: <code>: <message>`.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl Failure {
    pub fn config(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit: 2,
        }
    }
}

impl From<isingc_core::Error> for Failure {
    fn from(e: isingc_core::Error) -> Self {
        use isingc_core::Error as E;
        let exit = match &e {
            E::VerificationFailed(_) => 3,
            E::MissingField(_)
            | E::InvalidDocument(_)
            | E::AsymmetricCoupling { .. }
            | E::DuplicateCoupling { .. }
            | E::CouplingOutOfRange { .. }
            | E::UnknownPreset(_)
            | E::SequenceParse { .. }
            | E::InvalidAngle(_)
            | E::InvalidParameter(_)
            | E::InvalidPauli(_)
            | E::LengthMismatch { .. }
            | E::SpinOutOfRange { .. }
            | E::DuplicateSpins(_)
            | E::InvalidSegments(_) => 2,
            _ => 1,
        };
        Self {
            code: e.code(),
            message: e.to_string(),
            exit,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: "io",
            message: e.to_string(),
            exit: 1,
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error:")
                .trim();
            eprintln!("error: usage: {}", one_line(first));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.code, one_line(&f.message));
            ExitCode::from(f.exit)
        }
    }
}
