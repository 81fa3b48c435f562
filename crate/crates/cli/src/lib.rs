//! Library behind the `kplane` binary: validate simplices, project points
//! onto faces, compute altitudes and run the invariant suite.
//!
//! Exit codes: 0 success, 1 domain error (or failed invariants), 2 parse or
//! usage error.

pub mod commands;
pub mod document;
pub mod report;

use std::ffi::OsString;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use commands::{Globals, RandomSpec, UsageError};
use document::{parse_document, SimplexDocument};
use report::Report;

#[derive(Parser, Debug)]
#[command(
    name = "kplane",
    version,
    about = "Orthogonal projections onto faces of hyperbolic and spherical simplices"
)]
struct Cli {
    /// Multiply every default tolerance by this factor.
    #[arg(long, global = true, default_value_t = 1.0, value_name = "FACTOR")]
    tol: f64,

    /// Emit JSON instead of `path value` lines.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for sampled faces, points and the oracle grid.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the simplex and report det M, det G and membership residuals.
    Validate {
        /// Input document, or `-` for stdin.
        file: PathBuf,
    },
    /// Project a point onto the plane of a face.
    Project {
        file: PathBuf,
        /// 1-based vertex indices, e.g. `1,2`.
        #[arg(long)]
        face: String,
        /// Point coordinates separated by commas or spaces.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Also run the brute-force oracle and report the deviation.
        #[arg(long)]
        check: bool,
    },
    /// Facet altitudes, or altitudes from every other vertex to `--face`.
    Altitudes {
        file: PathBuf,
        #[arg(long)]
        face: Option<String>,
    },
    /// Run the full invariant suite on a document or on random simplices.
    Check {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        file: Option<PathBuf>,
        /// Generate COUNT simplices of dimension N from seeds SEED, SEED+1, ...
        #[arg(long, num_args = 4, value_names = ["MODEL", "N", "SEED", "COUNT"])]
        random: Option<Vec<String>>,
    },
}

fn read_document(path: &Path) -> Result<SimplexDocument, UsageError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| UsageError(format!("reading stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("reading {}: {e}", path.display())))?
    };
    parse_document(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<Report, UsageError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(UsageError(format!(
            "--tol must be a positive number, got {}",
            cli.tol
        )));
    }
    let globals = Globals {
        tol_scale: cli.tol,
        seed: cli.seed,
    };
    Ok(match &cli.command {
        Command::Validate { file } => commands::validate(&read_document(file)?, &globals),
        Command::Project {
            file,
            face,
            point,
            check,
        } => commands::project(&read_document(file)?, &globals, face, point, *check)?,
        Command::Altitudes { file, face } => {
            commands::altitudes(&read_document(file)?, &globals, face.as_deref())?
        }
        Command::Check { file, random } => match (file, random) {
            (_, Some(values)) => commands::check_random(&RandomSpec::parse(values)?, &globals),
            (Some(file), None) => commands::check_document(&read_document(file)?, &globals),
            (None, None) => return Err(UsageError("check needs a file or --random".into())),
        },
    })
}

/// What one invocation printed and how it exited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line `args` (program name first) without touching the
/// process streams.
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code() as u8;
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match run(&cli) {
        Ok(report) => Outcome {
            code: if report.status() == "ok" { 0 } else { 1 },
            stdout: report.render(cli.json),
            stderr: report
                .error_message()
                .map(|m| format!("kplane: {m}\n"))
                .unwrap_or_default(),
        },
        Err(UsageError(message)) => {
            let mut report = Report::new(command_name(&cli.command));
            report.fail("ParseError", message.clone());
            Outcome {
                code: 2,
                stdout: report.render(cli.json),
                stderr: format!("kplane: {message}\n"),
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Project { .. } => "project",
        Command::Altitudes { .. } => "altitudes",
        Command::Check { .. } => "check",
    }
}
