//! `qrandlab`: replayable experiments on finite-depth quantum states.
//!
//! Exit codes: 0 pass, 2 validation failure, 3 search exhausted,
//! 4 acceptance failure. The dense-representation cap can be raised with
//! `QRANDLAB_DENSE_MAX_QUBITS`.

mod commands;
mod error;
mod input;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BuildArgs, StateArgs};
use reproduce::Experiment;

#[derive(Parser, Debug)]
#[command(name = "qrandlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of H(ρ_n) and H(ρ_n)/n, with a trailing-window rate estimate
    EntropyProfile {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 5)]
        window: usize,
    },
    /// Construct a test from a state and report per-term certificates
    BuildTest {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Weight table of a state against a serialized test
    Evaluate {
        #[command(flatten)]
        state: StateArgs,
        /// Test document (inline JSON or path)
        #[arg(long)]
        test: String,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// Uniform-integrability moduli over a δ grid
    UiProfile {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.1])]
        delta: Vec<f64>,
    },
    /// Run a named experiment end to end
    Reproduce {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory; defaults to ./reproduce-<experiment>
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::EntropyProfile { state, window } => commands::entropy_profile_cmd(state, *window),
        Command::BuildTest { state, build } => commands::build_test_cmd(state, build),
        Command::Evaluate { state, test, delta } => commands::evaluate_cmd(state, test, *delta),
        Command::UiProfile { state, delta } => commands::ui_profile_cmd(state, delta),
        Command::Reproduce { experiment, seed, out } => {
            let dir = out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("reproduce-{}", experiment.name())));
            reproduce::reproduce_cmd(*experiment, *seed, &dir)
        }
    };
    match result {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use error::Status;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn status_codes() {
        assert_eq!(ExitCode::from(Status::Pass), ExitCode::from(0));
        assert_eq!(ExitCode::from(Status::SearchExhausted), ExitCode::from(3));
        assert_eq!(ExitCode::from(Status::AcceptanceFailed), ExitCode::from(4));
    }
}
