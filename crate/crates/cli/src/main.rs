#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod io;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use io::Inputs;
use report::Report;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input; exit status 2.
    Usage(String),
    /// The computation itself failed; exit status 1.
    Compute(specbound_core::Error),
}

impl From<specbound_core::Error> for CliError {
    fn from(e: specbound_core::Error) -> Self {
        CliError::Compute(e)
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("SPECBOUND_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("specbound: ignoring SPECBOUND_THREADS={v:?}"),
    }
}

fn dispatch(cli: &Cli, inputs: &mut Inputs) -> Result<(commands::Outcome, serde_json::Value), CliError> {
    let seed = cli.seed;
    let (out, params) = match &cli.command {
        Command::SphereSample(a) => (commands::sphere_sample(a, seed)?, report::to_json(a)),
        Command::Sigma2(a) => (commands::sigma2_cmd(a)?, report::to_json(a)),
        Command::Opnorm(a) => (commands::opnorm(a, seed, inputs)?, report::to_json(a)),
        Command::AndCoeff(a) => (commands::and_coeff(a, seed, inputs)?, report::to_json(a)),
        Command::RatioCert(a) => (commands::ratio_cert(a, seed, inputs)?, report::to_json(a)),
        Command::Fluctuation(a) => (commands::fluctuation(a, seed, inputs)?, report::to_json(a)),
        Command::TvEps(a) => (commands::tv_eps(a, inputs)?, report::to_json(a)),
        Command::Dro(a) => (commands::dro(a)?, report::to_json(a)),
        Command::Bounds(a) => (commands::bounds(a, inputs)?, report::to_json(a)),
    };
    Ok((out, params))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    configure_threads();

    let mut inputs = Inputs::default();
    match dispatch(&cli, &mut inputs) {
        Ok((out, params)) => {
            let echo = argv[1..].to_vec();
            let report = Report {
                command: cli.command.name(),
                seed: cli.seed,
                digest: report::digest(&echo, &inputs.files),
                argv: echo,
                params,
                results: out.results,
                warnings: out.warnings,
            };
            let text = report::render(&report.to_value());
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("specbound: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(e)) => {
            eprintln!("specbound: {e}");
            ExitCode::from(1)
        }
    }
}
