//! Command-line driver: parse a scenario, build its model, check it, and
//! print the report.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::kernel::{CheckError, CheckOptions, Verdict};
use crate::models::{Model, MODELS};
use crate::report::{render_structured, render_text, ReplayOutcome};
use crate::scenario::{parse_scenario_bytes, validate_semantics, ScenarioDef, Severity};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_LIMIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "permcheck",
    version,
    about = "Explicit-state checker for Android permission models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file.
    Check(CheckArgs),
    /// List the built-in models with their parameters and invariants.
    ListModels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
struct CheckArgs {
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Override the scenario's state limit.
    #[arg(long, value_name = "N")]
    max_states: Option<usize>,
    /// Only count reachable states; no invariant is evaluated.
    #[arg(long)]
    stats_only: bool,
    /// Validate a JSON report produced earlier against this scenario.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,
    /// Worker threads used to expand each search level.
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_PASS
            };
        }
    };
    match cli.command {
        Command::ListModels => list_models(out),
        Command::Check(args) => check(&args, out, err),
    }
}

fn list_models(out: &mut dyn Write) -> u8 {
    for model in MODELS {
        let _ = writeln!(
            out,
            "{}\n  params: {}\n  invariants: {}",
            model.name,
            model.params,
            model.invariants.join(", ")
        );
    }
    EXIT_PASS
}

fn load_scenario(path: &Path, err: &mut dyn Write) -> Option<ScenarioDef> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match parse_scenario_bytes(&bytes) {
        Ok(def) => {
            for finding in validate_semantics(&def) {
                if finding.severity == Severity::Warning {
                    let _ = writeln!(err, "{}: {finding}", path.display());
                }
            }
            Some(def)
        }
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", path.display());
            None
        }
    }
}

fn check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let Some(def) = load_scenario(&args.scenario, err) else {
        return EXIT_USAGE;
    };
    let model = match Model::from_scenario(&def) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };

    if let Some(path) = &args.replay {
        let document = match std::fs::read_to_string(path) {
            Ok(d) => d,
            Err(e) => {
                let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
                return EXIT_USAGE;
            }
        };
        return match model.replay(&document) {
            Ok(ReplayOutcome::Confirmed) => {
                let _ = writeln!(out, "Replay confirmed: the trace reproduces the violation.");
                EXIT_PASS
            }
            Ok(ReplayOutcome::Diverged { step, reason }) => {
                let _ = writeln!(out, "Replay diverged at step {step}: {reason}");
                EXIT_VIOLATION
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_USAGE
            }
        };
    }

    let max_states = match args.max_states {
        Some(n) => n,
        None => usize::try_from(def.max_states).unwrap_or(usize::MAX),
    };
    let options = CheckOptions {
        max_states,
        invariants: Some(if args.stats_only {
            Vec::new()
        } else {
            def.checks.clone()
        }),
        workers: args.workers,
    };
    let report = match model.check(&options) {
        Ok(r) => r,
        Err(e @ CheckError::InvalidOptions(_)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_LIMIT;
        }
    };
    let rendered = match args.format {
        Format::Text => render_text(&report),
        Format::Json => render_structured(&report),
    };
    let _ = out.write_all(rendered.as_bytes());
    match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Violation(_) => EXIT_VIOLATION,
        Verdict::LimitExceeded => EXIT_LIMIT,
    }
}
