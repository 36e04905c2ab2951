//! Command-line front end: coupling energies of distribution files,
//! scenario runs, parameter sweeps and trial planning.
//!
//! Exit codes: 0 ok, 1 I/O and other failures, 2 schema or usage errors,
//! 3 convergence failure, 4 stable superposition.

pub mod error;
pub mod report;
pub mod svg;

mod eg;
mod run;
mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use reductionlab_core::scenarios::required_trials;
use reductionlab_core::PhysicalConstants;

pub use error::CliError;
pub use report::{evaluate, write_csv, Method, ReportRow, RunReport, RunSettings};

/// Environment variable naming a constants file. It takes precedence over
/// `--constants`.
pub const CONSTANTS_ENV: &str = "REDUCTIONLAB_CONSTANTS";

#[derive(Debug, Parser)]
#[command(name = "reductionlab", version, about = "Gravity-induced state reduction: couplings, probabilities, sweeps")]
pub struct Cli {
    /// JSON file with physical constants (G, hbar, k_boltzmann, c_light, xi).
    #[arg(long, global = true, value_name = "FILE")]
    pub constants: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling energy between two mass distributions.
    Eg(eg::EgArgs),
    /// Reduction probabilities of a scenario.
    Run(run::RunArgs),
    /// Parameter sweeps written as CSV with an optional SVG plot.
    Sweep(sweep::SweepArgs),
    /// Number of runs needed to resolve a probability difference.
    Plan(PlanArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Probability difference to resolve.
    #[arg(long)]
    pub accuracy: f64,
    /// Detector quantum efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
}

/// Constants from the environment file, the `--constants` file or the
/// built-in defaults, in that order.
pub fn load_constants(flag: Option<&Path>) -> Result<PhysicalConstants, CliError> {
    let env = std::env::var_os(CONSTANTS_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let Some(path) = env.or_else(|| flag.map(Path::to_path_buf)) else {
        return Ok(PhysicalConstants::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Other(format!("cannot read constants file {}: {e}", path.display())))?;
    let consts: PhysicalConstants =
        serde_json::from_str(&text).map_err(|e| CliError::json(&path.display().to_string(), &e))?;
    consts
        .validate()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(consts)
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `path`, or to `out` when no path is given.
pub(crate) fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Other(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(bytes)?),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let constants = cli.constants.as_deref();
    match cli.command {
        Command::Eg(a) => eg::cmd_eg(&a, &load_constants(constants)?, out),
        Command::Run(a) => run::cmd_run(&a, constants, out, err),
        Command::Sweep(a) => sweep::cmd_sweep(&a, &load_constants(constants)?, out, err),
        Command::Plan(a) => {
            let n = required_trials(a.accuracy, a.efficiency)?;
            writeln!(out, "{n}")?;
            Ok(())
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return e.exit_code();
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
