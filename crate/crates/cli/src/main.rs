//! `aniso`: maximal functions, weight characteristics, Morrey norms and
//! numerical checks of the weighted estimates, from the command line.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ApArgs, ConfigError, MaximalArgs, NormArgs, Outcome, PlotArgs, SuiteArgs, VerifyArgs};

#[derive(Parser, Debug)]
#[command(name = "aniso", version, about, args_override_self = true)]
struct Cli {
    /// `key = value` file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Write Mf, M_w f, f^# or M_r f on the grid.
    Maximal(MaximalArgs),
    /// Print an L_p, weak L_p or Morrey norm.
    Norm(NormArgs),
    /// Print [w]_{A_p}, [w]_{A_1} and the doubling constants D, D_1.
    Apconst(ApArgs),
    /// Run one check and emit its JSON report.
    Verify(VerifyArgs),
    /// Run every check on fixed configurations.
    Suite(SuiteArgs),
    /// Render a 1-D grid or refinement histories to SVG.
    Plot(PlotArgs),
}

fn init_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("ANISO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("ANISO_THREADS=`{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(e.to_string()))
}

fn is_config_error(err: &anyhow::Error) -> bool {
    use aniso::Error as E;
    err.chain().any(|c| {
        if c.downcast_ref::<ConfigError>().is_some() || c.downcast_ref::<std::io::Error>().is_some() {
            return true;
        }
        matches!(
            c.downcast_ref::<E>(),
            Some(
                E::Parse(_)
                    | E::InvalidParameter { .. }
                    | E::InvalidDomain(_)
                    | E::InvalidAnisotropy(_)
                    | E::DimensionMismatch { .. }
                    | E::Io(_)
            )
        )
    })
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Maximal(a) => commands::run_maximal(a),
        Command::Norm(a) => commands::run_norm(a),
        Command::Apconst(a) => commands::run_apconst(a),
        Command::Verify(a) => commands::run_verify(a),
        Command::Suite(a) => commands::run_suite_cmd(a),
        Command::Plot(a) => commands::run_plot(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(exit_status(&result))
}

fn exit_status(result: &anyhow::Result<Outcome>) -> u8 {
    match result {
        Ok(Outcome::Passed) => 0,
        Ok(Outcome::CheckFailed) => 1,
        Err(e) if is_config_error(e) => 2,
        Err(_) => 1,
    }
}
