//! Command-line driver: the `verify` suite and single-instance pipelines,
//! writing a JSON report and CSV curves.

pub mod commands;
pub mod config;
pub mod report;
pub mod suite;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Command, CommonArgs, RunConfig, Specific, UsageError};
use report::{Outcome, ReportBundle};

#[derive(Debug, Parser)]
#[command(
    name = "asymconj",
    version,
    about = "Conjugate-duality diagnostics on asymmetrically normed spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the full invariant suite.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Squared reversed half-Euclidean norm: conjugate, minimiser, harness.
    Example1 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dim: Option<usize>,
        /// The functional, comma-separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
        /// Grid spacing.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Cumulant-generating-function pipeline for one model.
    Cgf {
        #[command(flatten)]
        common: CommonArgs,
        /// Model JSON; the two-atom model when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
    },
    /// Conjugate a grid function given as JSON.
    Conjugate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Dual grid as a JSON list of axes; the input grid when absent.
        #[arg(long)]
        dual: Option<PathBuf>,
    },
}

fn resolve(cmd: Cmd) -> Result<RunConfig, UsageError> {
    match cmd {
        Cmd::Verify { common } => RunConfig::resolve(Command::Verify, &common, Specific::default()),
        Cmd::Example1 { common, dim, y, h } => RunConfig::resolve(
            Command::Example1,
            &common,
            Specific {
                dim,
                y,
                h,
                ..Default::default()
            },
        ),
        Cmd::Cgf { common, model, y } => RunConfig::resolve(
            Command::Cgf,
            &common,
            Specific {
                model,
                y,
                ..Default::default()
            },
        ),
        Cmd::Conjugate {
            common,
            input,
            dual,
        } => RunConfig::resolve(
            Command::Conjugate,
            &common,
            Specific {
                input,
                dual,
                ..Default::default()
            },
        ),
    }
}

/// Runs the command in `cfg` and returns the assembled report.
pub fn execute(cfg: &RunConfig) -> Result<ReportBundle, UsageError> {
    let start = Instant::now();
    let outcomes: Vec<Outcome> = match cfg.command {
        Command::Verify => suite::run_all(&suite::Ctx::from_config(cfg)),
        Command::Example1 => vec![commands::example1(cfg)?],
        Command::Cgf => vec![commands::cgf(cfg)?],
        Command::Conjugate => vec![commands::conjugate(cfg)?],
    };
    let ms = start.elapsed().as_millis() as u64;
    Ok(ReportBundle::assemble(cfg, outcomes, ms))
}

/// Parses arguments, runs, writes output. Returns the process exit code:
/// 0 when every check passes, 1 on a failed check, 2 on a usage or
/// configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let bundle = match resolve(cli.command).and_then(|cfg| Ok((execute(&cfg)?, cfg))) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let (bundle, cfg) = bundle;
    match cfg.out_dir() {
        Some(dir) => {
            if let Err(e) = bundle.write_to(dir) {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return 2;
            }
            print!("{}", bundle.text_summary());
        }
        None => print!("{}", bundle.to_json()),
    }
    bundle.exit_code()
}
