//! Command-line front end: a text document format for charts, maps,
//! algebroids, connections, IM components, groupoids, recipes and check
//! requests, plus the `check`, `report` and `construct` commands.

mod document;
mod run;
mod syntax;


use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use document::{CheckKind, CheckRequest, Decl, Document, Object, Recipe};
pub use run::{construct, run_checks, run_target, CheckOutcome, RunReport, Status};
pub use syntax::{format_document, parse_document, RawDecl, RawEntry};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "IMCONNECT_THREADS";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Malformed input: syntax, unresolved references, invalid objects or
/// constructor preconditions. Maps to exit code 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputError {
    pub line: Option<usize>,
    pub message: String,
}

impl InputError {
    pub fn new(message: impl Into<String>) -> InputError {
        InputError {
            line: None,
            message: message.into(),
        }
    }

    pub fn at(line: usize, message: impl Into<String>) -> InputError {
        InputError {
            line: (line > 0).then_some(line),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(
    name = "imconnect",
    version,
    about = "Exact verification of multiplicative and IM connections"
)]
pub struct Cli {
    /// Polynomial degree of the jet test family.
    #[arg(long, global = true, default_value_t = crate::imconn::DEFAULT_JET_DEGREE)]
    pub jet_degree: u32,
    /// Also write the structured report as JSON to this path.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one target, or every check request when no target is given.
    Check {
        file: PathBuf,
        /// A check request or an object to verify.
        #[arg(long)]
        target: Option<String>,
    },
    /// Run every check request with full per-equation detail.
    Report { file: PathBuf },
    /// Build a recipe and write the result as a standalone document.
    Construct {
        file: PathBuf,
        #[arg(long)]
        recipe: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        InputError::new(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    // A pool configured earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn load_file(path: &Path) -> Result<Document, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError::new(format!("cannot read {}: {e}", path.display())))?;
    Document::load(&text)
}

fn write_json(path: &Path, report: &RunReport) -> Result<(), InputError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| InputError::new(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| InputError::new(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, InputError> {
    configure_threads()?;
    let (report, detailed) = match &cli.command {
        Command::Check { file, target } => {
            let doc = load_file(file)?;
            let report = match target {
                Some(t) => run_target(&doc, t, cli.jet_degree)?,
                None => run_checks(&doc, cli.jet_degree),
            };
            (report.with_file(file), false)
        }
        Command::Report { file } => (
            run_checks(&load_file(file)?, cli.jet_degree).with_file(file),
            true,
        ),
        Command::Construct {
            file,
            recipe,
            out: dest,
        } => {
            let doc = load_file(file)?;
            let built = construct(&doc, recipe)?;
            let text = built.format();
            std::fs::write(dest, &text)
                .map_err(|e| InputError::new(format!("cannot write {}: {e}", dest.display())))?;
            let reloaded = Document::load(&text).map_err(|e| {
                InputError::new(format!("constructed document does not reload: {e}"))
            })?;
            let _ = writeln!(
                out,
                "wrote {} ({} declarations)",
                dest.display(),
                reloaded.decls().len()
            );
            (run_checks(&reloaded, cli.jet_degree).with_file(dest), false)
        }
    };
    let _ = write!(out, "{}", report.render(detailed));
    if let Some(path) = &cli.json {
        write_json(path, &report)?;
    }
    Ok(report.exit_code())
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}
