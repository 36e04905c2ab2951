//! Evaluation of a scenario by one method and the resulting table.

use std::io::Write;

use clap::ValueEnum;
use reductionlab_core::montecarlo::{estimate, TrialConfig};
use reductionlab_core::reduction::{cascade_distribution, default_horizon, timedep_probabilities_with, HorizonStatus};
use reductionlab_core::scenarios::{Scenario, ScenarioFile};
use reductionlab_core::PhysicalConstants;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CSV_HEADER: [&str; 7] = ["scenario", "method", "outcome", "probability", "stderr", "expected", "provenance"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Per-state probabilities of the first trigger with constant couplings.
    Static,
    /// Per-state first-trigger probabilities under the coupling profiles.
    Timedep,
    /// Exact distribution of the surviving sets after the full cascade.
    Cascade,
    /// Monte Carlo estimate of the surviving sets.
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Static => "static",
            Self::Timedep => "timedep",
            Self::Cascade => "cascade",
            Self::Mc => "mc",
        }
    }
}

/// Everything besides the scenario and the constants that affects the
/// numbers in the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub trials: u64,
    /// End of the integration window or of each trial; the default is
    /// derived from the scenario when absent.
    pub horizon: Option<f64>,
    /// Residual probability tolerated by `timedep` before the horizon is
    /// reported as too short.
    pub tolerance: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100_000,
            horizon: None,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Zero-based surviving states; `None` for "no trigger fired".
    pub outcome: Option<Vec<usize>>,
    pub probability: f64,
    pub stderr: Option<f64>,
    pub expected: Option<f64>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub method: Method,
    pub rows: Vec<ReportRow>,
    pub constants: PhysicalConstants,
    pub settings: RunSettings,
    /// Horizon actually used by `timedep` and `mc`.
    pub horizon_used: Option<f64>,
    pub rng: Option<String>,
    /// `ok` or `horizon_too_short`.
    pub status: String,
    /// Scenario as a file document; replaying it reproduces the table.
    pub scenario_file: ScenarioFile,
    pub source: Option<String>,
    pub wall_clock_seconds: f64,
    pub version: String,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == "ok"
    }

    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }
}

/// `{1,2,3}` with one-based state numbers, or `none`.
pub fn outcome_label(outcome: Option<&[usize]>) -> String {
    match outcome {
        None => "none".into(),
        Some(states) => {
            let parts: Vec<String> = states.iter().map(|k| (k + 1).to_string()).collect();
            format!("{{{}}}", parts.join(","))
        }
    }
}

fn row(sc: &Scenario, outcome: Option<Vec<usize>>, probability: f64, stderr: Option<f64>) -> ReportRow {
    let hit = outcome.as_ref().and_then(|o| {
        sc.expected.iter().find(|e| {
            let mut states = e.outcome.clone();
            states.sort_unstable();
            &states == o
        })
    });
    ReportRow {
        outcome,
        probability,
        stderr,
        expected: hit.map(|e| e.probability),
        provenance: hit.map(|e| e.provenance.clone()).unwrap_or_default(),
    }
}

pub fn evaluate(
    sc: &Scenario,
    method: Method,
    settings: &RunSettings,
    consts: &PhysicalConstants,
    source: Option<String>,
) -> Result<RunReport, CliError> {
    let start = std::time::Instant::now();
    let s = &sc.superposition;
    if s.is_stable() {
        return Err(CliError::Stable(format!(
            "scenario `{}` has no coupling between any two states",
            sc.name
        )));
    }
    let mut rows = Vec::new();
    let mut horizon_used = None;
    let mut rng = None;
    let mut status = "ok";
    match method {
        Method::Static => {
            for (j, p) in s.static_probabilities()?.into_iter().enumerate() {
                rows.push(row(sc, Some(vec![j]), p, None));
            }
        }
        Method::Timedep => {
            let horizon = match settings.horizon {
                Some(h) => h,
                None => default_horizon(s, &sc.profiles, 0.0, consts)?,
            };
            horizon_used = Some(horizon);
            let r = timedep_probabilities_with(s, &sc.profiles, 0.0, horizon, settings.tolerance, consts)?;
            for (j, &p) in r.probabilities.iter().enumerate() {
                rows.push(row(sc, Some(vec![j]), p, None));
            }
            if r.residual > 0.0 {
                rows.push(row(sc, None, r.residual, None));
            }
            if r.status == HorizonStatus::HorizonTooShort {
                status = "horizon_too_short";
            }
        }
        Method::Cascade => {
            for (outcome, &p) in cascade_distribution(s, &sc.profiles, consts)?.iter() {
                rows.push(row(sc, Some(outcome.clone()), p, None));
            }
        }
        Method::Mc => {
            let mut config = TrialConfig::for_superposition(settings.seed, settings.trials, s, &sc.profiles, consts)?;
            if let Some(h) = settings.horizon {
                config.horizon = h;
            }
            horizon_used = Some(config.horizon);
            let est = estimate(s, &sc.profiles, &config, consts)?;
            let n = est.n_trials as f64;
            for o in &est.outcomes {
                rows.push(row(sc, Some(o.surviving.clone()), o.probability, Some(o.standard_error)));
            }
            if est.n_no_event > 0 {
                let p = est.n_no_event as f64 / n;
                rows.push(row(sc, None, p, Some((p * (1.0 - p) / n).sqrt())));
            }
            rng = Some(est.rng);
        }
    }
    Ok(RunReport {
        scenario: sc.name.clone(),
        method,
        rows,
        constants: *consts,
        settings: *settings,
        horizon_used,
        rng,
        status: status.into(),
        scenario_file: sc.to_file(),
        source,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

/// Shortest text that parses back to the same `f64`; scientific notation
/// outside `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Writes the probability table. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv<W: Write>(report: &RunReport, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            report.scenario.as_str(),
            report.method.as_str(),
            &outcome_label(r.outcome.as_deref()),
            &fmt_float(r.probability),
            &opt(r.stderr),
            &opt(r.expected),
            &r.provenance,
        ])?;
    }
    w.flush()?;
    Ok(())
}
