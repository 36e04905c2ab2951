use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args};
use reductionlab_core::scenarios::{builder_names, BuilderSpec, Scenario};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::report::{evaluate, write_csv, Method, RunReport, RunSettings};
use crate::{emit, load_constants, read_text};

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["scenario", "builder", "replay"])))]
pub struct RunArgs {
    /// Scenario file (JSON).
    pub scenario: Option<PathBuf>,
    /// Build the scenario by name instead of reading a file.
    #[arg(long)]
    pub builder: Option<String>,
    /// Builder parameter as `name=value`; values are parsed as JSON when
    /// possible (`--param n_detectors=4 --param center=mutant`).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Re-run the scenario, method, settings and constants recorded in a
    /// report. Other evaluation flags are ignored.
    #[arg(long, value_name = "REPORT")]
    pub replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Cascade)]
    pub method: Method,
    #[arg(long, default_value_t = RunSettings::default().trials)]
    pub trials: u64,
    #[arg(long, default_value_t = RunSettings::default().seed)]
    pub seed: u64,
    /// End of the time window in seconds (timedep and mc).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Residual probability tolerated by timedep.
    #[arg(long, default_value_t = RunSettings::default().tolerance)]
    pub tolerance: f64,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run report with everything needed to replay the run.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Scenario from a builder name and `name=value` pairs.
pub fn scenario_from_builder(name: &str, params: &[String]) -> Result<Scenario, CliError> {
    let known = builder_names();
    let Some(expected) = known.get(name) else {
        let names: Vec<&str> = known.keys().copied().collect();
        return Err(CliError::Schema(format!(
            "unknown builder `{name}`; available: {}",
            names.join(", ")
        )));
    };
    let mut obj = Map::new();
    obj.insert("builder".into(), Value::String(name.into()));
    for p in params {
        let Some((key, raw)) = p.split_once('=') else {
            return Err(CliError::Schema(format!("parameter `{p}` is not of the form name=value")));
        };
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
        if name == "continuous_medium" && key == "n" {
            obj.insert("weights".into(), serde_json::json!({ "kind": "uniform", "n": value }));
        } else {
            obj.insert(key.into(), value);
        }
    }
    let spec: BuilderSpec = serde_json::from_value(Value::Object(obj)).map_err(|e| {
        CliError::Schema(format!(
            "builder `{name}`: {e} (parameters: {})",
            expected.join(", ")
        ))
    })?;
    Ok(spec.build()?)
}

fn scenario_from_file(path: &Path) -> Result<Scenario, CliError> {
    Scenario::from_json(&read_text(path)?).map_err(|e| match CliError::from(e) {
        CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn cmd_run(
    args: &RunArgs,
    constants_flag: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let report = if let Some(path) = &args.replay {
        let text = read_text(path)?;
        let old: RunReport = serde_json::from_str(&text).map_err(|e| CliError::json(&path.display().to_string(), &e))?;
        let sc = old.scenario_file.clone().into_scenario()?;
        evaluate(&sc, old.method, &old.settings, &old.constants, old.source.clone())?
    } else {
        let consts = load_constants(constants_flag)?;
        let (sc, source) = match (&args.scenario, &args.builder) {
            (Some(path), _) => (scenario_from_file(path)?, Some(path.display().to_string())),
            (None, Some(name)) => (scenario_from_builder(name, &args.params)?, None),
            (None, None) => unreachable!("clap requires an input"),
        };
        let settings = RunSettings {
            seed: args.seed,
            trials: args.trials,
            horizon: args.horizon,
            tolerance: args.tolerance,
        };
        evaluate(&sc, args.method, &settings, &consts, source)?
    };

    let mut csv = Vec::new();
    write_csv(&report, &mut csv)?;
    emit(args.out.as_deref(), &csv, out)?;
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
        emit(Some(path), json.as_bytes(), out)?;
    }
    writeln!(
        err,
        "{} [{}]: {} rows, total probability {}, {:.3} s",
        report.scenario,
        report.method.as_str(),
        report.rows.len(),
        report.total_probability(),
        report.wall_clock_seconds
    )?;
    if !report.converged() {
        let horizon = report.horizon_used.unwrap_or(f64::NAN);
        return Err(CliError::Convergence(format!(
            "residual probability above {} at horizon {horizon} s; pass a longer --horizon",
            report.settings.tolerance
        )));
    }
    Ok(())
}
