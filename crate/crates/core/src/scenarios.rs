//! Builders for the standard experiments, the delayed-detector sweep and
//! the measurement-planning helper.
//!
//! Couplings are not written down pair by pair. Each builder describes a
//! set of detectors with a per-state configuration; two states couple
//! through every detector whose configuration differs between them, and
//! far-separated detector contributions add. A detector that records
//! without changing its mass distribution contributes nothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::reduction::{
    cascade_distribution, CouplingProfile, PairProfile, ProfileSet, ReductionError, Superposition,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario file: {message} (line {line}, column {column})")]
    Parse { message: String, line: usize, column: usize },
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// A detector and the configuration it ends up in for every state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    /// Coupling contributed between two states that leave this detector in
    /// different configurations; zero for a detector that conserves its
    /// mass distribution.
    pub e_plateau: f64,
    #[serde(default)]
    pub profile: CouplingProfile,
    pub configuration: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DetectorNetwork {
    pub detectors: Vec<Detector>,
}

impl DetectorNetwork {
    /// Couplings and their time dependence for `n` states.
    pub fn couplings(&self, n: usize) -> Result<(Vec<Vec<f64>>, ProfileSet), ScenarioError> {
        for (k, d) in self.detectors.iter().enumerate() {
            if d.configuration.len() != n {
                return invalid(format!("detector {k} has {} configurations for {n} states", d.configuration.len()));
            }
            if !(d.e_plateau.is_finite() && d.e_plateau >= 0.0) {
                return invalid(format!("detector {k} has invalid e_plateau {}", d.e_plateau));
            }
            d.profile.validate()?;
        }
        let mut matrix = vec![vec![0.0; n]; n];
        let mut pair_profiles = Vec::new();
        for i in 0..n {
            for j in 0..i {
                let parts: Vec<(f64, &CouplingProfile)> = self
                    .detectors
                    .iter()
                    .filter(|d| d.e_plateau > 0.0 && d.configuration[i] != d.configuration[j])
                    .map(|d| (d.e_plateau, &d.profile))
                    .collect();
                let e: f64 = parts.iter().map(|p| p.0).sum();
                if e == 0.0 {
                    continue;
                }
                matrix[i][j] = e;
                matrix[j][i] = e;
                pair_profiles.push((j, i, combine(&parts, e)));
            }
        }
        let default = pair_profiles.first().map(|p| p.2.clone()).unwrap_or_default();
        let pairs = pair_profiles
            .into_iter()
            .filter(|p| p.2 != default)
            .map(|(i, j, profile)| PairProfile { i, j, profile })
            .collect();
        Ok((matrix, ProfileSet { default, pairs }))
    }
}

fn combine(parts: &[(f64, &CouplingProfile)], total: f64) -> CouplingProfile {
    let mut merged: Vec<(f64, CouplingProfile)> = Vec::new();
    for (e, p) in parts {
        match merged.iter_mut().find(|m| m.1 == **p) {
            Some(m) => m.0 += e,
            None => merged.push((*e, (*p).clone())),
        }
    }
    if merged.len() == 1 {
        return merged.pop().expect("one part").1;
    }
    CouplingProfile::Mix {
        parts: merged.into_iter().map(|(e, p)| (e / total, p)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarCenter {
    Original,
    Mutant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightProfile {
    Uniform { n: usize },
    /// Discretized Gaussian centered on the middle cell.
    Gaussian { n: usize, sigma_cells: f64 },
    Explicit { weights: Vec<f64> },
}

impl WeightProfile {
    pub fn weights(&self) -> Result<Vec<f64>, ScenarioError> {
        let raw: Vec<f64> = match self {
            Self::Uniform { n } => vec![1.0; *n],
            Self::Gaussian { n, sigma_cells } => {
                if !(sigma_cells.is_finite() && *sigma_cells > 0.0) {
                    return invalid(format!("sigma_cells must be positive, got {sigma_cells}"));
                }
                let mid = (*n as f64 - 1.0) / 2.0;
                (0..*n)
                    .map(|k| (-0.5 * ((k as f64 - mid) / sigma_cells).powi(2)).exp())
                    .collect()
            }
            Self::Explicit { weights } => weights.clone(),
        };
        if raw.is_empty() {
            return invalid("weight profile is empty");
        }
        if raw.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("weights must be finite and non-negative");
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return invalid("weights sum to zero");
        }
        Ok(raw.iter().map(|w| w / total).collect())
    }
}

/// Named builder with its parameters, as stored in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuilderSpec {
    Fig3a {
        n_detectors: usize,
        e_plateau: f64,
        #[serde(default)]
        profile: CouplingProfile,
    },
    Fig3b {
        n_detectors: usize,
        e_plateau: f64,
        #[serde(default)]
        profile: CouplingProfile,
    },
    TwoDetectorOverlap {
        c1sq: f64,
        c2sq: f64,
        e_plateau: f64,
    },
    ContinuousMedium {
        weights: WeightProfile,
        e_plateau: f64,
    },
    BiologyStar {
        n_mutants: usize,
        c1sq: f64,
        center: StarCenter,
        e_plateau: f64,
    },
    /// `fig3b` whose conserving detectors start changing their mass
    /// distribution at `delta_t`.
    DelayedDetectors {
        n_detectors: usize,
        e_plateau: f64,
        delta_t: f64,
        #[serde(default)]
        rise: f64,
    },
}

impl BuilderSpec {
    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        match self {
            Self::Fig3a {
                n_detectors,
                e_plateau,
                profile,
            } => build_fig3a(*n_detectors, *e_plateau, profile.clone()),
            Self::Fig3b {
                n_detectors,
                e_plateau,
                profile,
            } => build_fig3b(*n_detectors, *e_plateau, profile.clone()),
            Self::TwoDetectorOverlap { c1sq, c2sq, e_plateau } => build_two_detector_overlap(*c1sq, *c2sq, *e_plateau),
            Self::ContinuousMedium { weights, e_plateau } => build_continuous_medium(weights, *e_plateau),
            Self::BiologyStar {
                n_mutants,
                c1sq,
                center,
                e_plateau,
            } => build_biology_star(*n_mutants, *c1sq, *center, *e_plateau),
            Self::DelayedDetectors {
                n_detectors,
                e_plateau,
                delta_t,
                rise,
            } => build_delayed_detectors(*n_detectors, *e_plateau, *delta_t, *rise),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig3a { .. } => "fig3a",
            Self::Fig3b { .. } => "fig3b",
            Self::TwoDetectorOverlap { .. } => "two_detector_overlap",
            Self::ContinuousMedium { .. } => "continuous_medium",
            Self::BiologyStar { .. } => "biology_star",
            Self::DelayedDetectors { .. } => "delayed_detectors",
        }
    }
}

/// Expected probability of one outcome and where the number comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedOutcome {
    pub outcome: Vec<usize>,
    pub probability: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub superposition: Superposition,
    pub profiles: ProfileSet,
    pub expected: Vec<ExpectedOutcome>,
    pub notes: String,
    /// Set when the scenario came from a builder.
    pub builder: Option<BuilderSpec>,
}

/// On-disk form: either explicit weights and couplings (joules) or a
/// builder with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<BuilderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<ProfileSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Vec<ExpectedOutcome>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let mut sc = match (self.builder, self.weights, self.couplings) {
            (Some(b), None, None) => {
                if self.profiles.is_some() {
                    return invalid("`profiles` cannot be combined with `builder`");
                }
                b.build()?
            }
            (None, Some(w), Some(c)) => {
                let superposition = Superposition::new(w, c)?;
                let profiles = self.profiles.unwrap_or_default();
                profiles.validate(superposition.len())?;
                Scenario {
                    name: String::new(),
                    superposition,
                    profiles,
                    expected: Vec::new(),
                    notes: String::new(),
                    builder: None,
                }
            }
            (Some(_), _, _) => return invalid("give either `builder` or `weights` and `couplings`, not both"),
            _ => return invalid("missing `weights`/`couplings` or `builder`"),
        };
        sc.name = self.name;
        if let Some(e) = self.expected {
            sc.expected = e;
        }
        if !self.notes.is_empty() {
            sc.notes = self.notes;
        }
        sc.validate()?;
        Ok(sc)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            message: {
                let full = e.to_string();
                let position = format!(" at line {} column {}", e.line(), e.column());
                full.strip_suffix(&position).map_or(full.clone(), str::to_string)
            },
            line: e.line(),
            column: e.column(),
        })?;
        file.into_scenario()
    }

    /// File form that rebuilds this scenario.
    pub fn to_file(&self) -> ScenarioFile {
        match &self.builder {
            Some(b) => ScenarioFile {
                name: self.name.clone(),
                weights: None,
                couplings: None,
                builder: Some(b.clone()),
                profiles: None,
                expected: Some(self.expected.clone()),
                notes: self.notes.clone(),
            },
            None => ScenarioFile {
                name: self.name.clone(),
                weights: Some(self.superposition.weights().to_vec()),
                couplings: Some(self.superposition.couplings().to_vec()),
                builder: None,
                profiles: Some(self.profiles.clone()),
                expected: Some(self.expected.clone()),
                notes: self.notes.clone(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.superposition.len();
        self.profiles.validate(n)?;
        if !self.expected.is_empty() {
            let total: f64 = self.expected.iter().map(|e| e.probability).sum();
            if (total - 1.0).abs() > 1e-9 {
                return invalid(format!("expected probabilities sum to {total}"));
            }
            for e in &self.expected {
                if e.outcome.iter().any(|&k| k >= n) || e.outcome.is_empty() {
                    return invalid(format!("expected outcome {:?} out of range", e.outcome));
                }
            }
        }
        Ok(())
    }
}

fn check_e(e_plateau: f64) -> Result<(), ScenarioError> {
    if e_plateau.is_finite() && e_plateau > 0.0 {
        Ok(())
    } else {
        invalid(format!("e_plateau must be positive, got {e_plateau}"))
    }
}

fn from_network(
    name: &str,
    weights: Vec<f64>,
    network: &DetectorNetwork,
    expected: Vec<ExpectedOutcome>,
    notes: &str,
) -> Result<Scenario, ScenarioError> {
    let n = weights.len();
    let (matrix, profiles) = network.couplings(n)?;
    let sc = Scenario {
        name: name.to_string(),
        superposition: Superposition::new(weights, matrix)?,
        profiles,
        expected,
        notes: notes.to_string(),
        builder: None,
    };
    sc.validate()?;
    Ok(sc)
}

/// Detector `d` fires only in state `d`.
fn one_detector_per_state(n: usize, e_plateau: f64, profile: &CouplingProfile) -> Vec<Detector> {
    (0..n)
        .map(|d| Detector {
            e_plateau,
            profile: profile.clone(),
            configuration: (0..n).map(|s| u32::from(s == d)).collect(),
        })
        .collect()
}

fn singleton_expectations(p: &[f64], provenance: &str) -> Vec<ExpectedOutcome> {
    p.iter()
        .enumerate()
        .map(|(k, &probability)| ExpectedOutcome {
            outcome: vec![k],
            probability,
            provenance: provenance.to_string(),
        })
        .collect()
}

/// A photon split over `n` detectors that all change their mass
/// distribution on detection. Every pair of states differs at two
/// detectors.
pub fn build_fig3a(n: usize, e_plateau: f64, profile: CouplingProfile) -> Result<Scenario, ScenarioError> {
    if n < 2 {
        return invalid("fig3a needs at least 2 detectors");
    }
    check_e(e_plateau)?;
    let network = DetectorNetwork {
        detectors: one_detector_per_state(n, e_plateau, &profile),
    };
    let mut sc = from_network(
        "fig3a",
        vec![1.0 / n as f64; n],
        &network,
        singleton_expectations(&vec![1.0 / n as f64; n], "projection postulate"),
        "all detectors change their mass distribution",
    )?;
    sc.builder = Some(BuilderSpec::Fig3a {
        n_detectors: n,
        e_plateau,
        profile,
    });
    Ok(sc)
}

/// As [`build_fig3a`], but only detector 0 changes its mass distribution;
/// the others record without doing so.
pub fn build_fig3b(n: usize, e_plateau: f64, profile: CouplingProfile) -> Result<Scenario, ScenarioError> {
    if n < 2 {
        return invalid("fig3b needs at least 2 detectors");
    }
    check_e(e_plateau)?;
    let mut detectors = one_detector_per_state(n, e_plateau, &profile);
    for d in detectors.iter_mut().skip(1) {
        d.e_plateau = 0.0;
    }
    let expected = vec![
        ExpectedOutcome {
            outcome: vec![0],
            probability: 0.5,
            provenance: "fifty-percent rule".into(),
        },
        ExpectedOutcome {
            outcome: (1..n).collect(),
            probability: 0.5,
            provenance: "fifty-percent rule".into(),
        },
    ];
    let mut sc = from_network(
        "fig3b",
        vec![1.0 / n as f64; n],
        &DetectorNetwork { detectors },
        expected,
        "only detector 0 changes its mass distribution",
    )?;
    sc.builder = Some(BuilderSpec::Fig3b {
        n_detectors: n,
        e_plateau,
        profile,
    });
    Ok(sc)
}

/// One particle, two detectors that may both see it: states are detected
/// at 1, detected at 2, not detected. States with zero weight are left
/// out, so a vanishing `c2sq` gives the two-state superposition of
/// detector 1 alone.
pub fn build_two_detector_overlap(c1sq: f64, c2sq: f64, e_plateau: f64) -> Result<Scenario, ScenarioError> {
    check_e(e_plateau)?;
    if !(c1sq >= 0.0 && c2sq >= 0.0 && c1sq + c2sq <= 1.0 + 1e-15) {
        return invalid(format!("weights {c1sq}, {c2sq} must be non-negative with sum <= 1"));
    }
    let c3 = (1.0 - c1sq - c2sq).max(0.0);
    let states: Vec<(f64, u32, u32)> = [(c1sq, 1, 0), (c2sq, 0, 1), (c3, 0, 0)]
        .into_iter()
        .filter(|s| s.0 > 0.0)
        .collect();
    let detector = |pick: fn(&(f64, u32, u32)) -> u32| Detector {
        e_plateau,
        profile: CouplingProfile::Constant,
        configuration: states.iter().map(pick).collect(),
    };
    let network = DetectorNetwork {
        detectors: vec![detector(|s| s.1), detector(|s| s.2)],
    };
    let mut sc = from_network(
        "two_detector_overlap",
        states.iter().map(|s| s.0).collect(),
        &network,
        Vec::new(),
        "detection probabilities keep the ratio c1sq/c2sq but their sum is not c1sq + c2sq",
    )?;
    if let Ok(p) = sc.superposition.static_probabilities() {
        sc.expected = singleton_expectations(&p, "column sums of the coupling matrix");
    }
    sc.builder = Some(BuilderSpec::TwoDetectorOverlap { c1sq, c2sq, e_plateau });
    Ok(sc)
}

/// A medium modeled as `n` small detectors, one per cell.
pub fn build_continuous_medium(weights: &WeightProfile, e_plateau: f64) -> Result<Scenario, ScenarioError> {
    check_e(e_plateau)?;
    let w = weights.weights()?;
    let n = w.len();
    if n < 2 {
        return invalid("continuous medium needs at least 2 cells");
    }
    let network = DetectorNetwork {
        detectors: one_detector_per_state(n, e_plateau, &CouplingProfile::Constant),
    };
    let expected = singleton_expectations(&w, "projection postulate");
    let mut sc = from_network("continuous_medium", w, &network, expected, "")?;
    sc.builder = Some(BuilderSpec::ContinuousMedium {
        weights: weights.clone(),
        e_plateau,
    });
    Ok(sc)
}

/// `p({center})` for a star with `k` outer states and center weight `w_c`.
pub fn star_center_probability(k: usize, w_center: f64) -> f64 {
    let kw = k as f64 * w_center;
    kw / (kw + 1.0 - w_center)
}

/// Large-`n` probability of reducing back to the original state when it
/// is the star center.
pub fn original_center_asymptotic(n_mutants: usize, c1sq: f64) -> f64 {
    1.0 - (1.0 - c1sq) / (n_mutants as f64 * c1sq)
}

/// Large-`n` probability of the distinguished mutant when it is the
/// star center.
pub fn mutant_center_asymptotic(c1sq: f64) -> f64 {
    (1.0 - c1sq) / (2.0 - c1sq)
}

/// Original state 0 with weight `c1sq` and `n_mutants` equal-weight mutant
/// states; only the center (state 0, or mutant state 1) differs in mass
/// distribution from the rest.
pub fn build_biology_star(
    n_mutants: usize,
    c1sq: f64,
    center: StarCenter,
    e_plateau: f64,
) -> Result<Scenario, ScenarioError> {
    if n_mutants < 1 {
        return invalid("biology star needs at least one mutant");
    }
    if !(c1sq > 0.0 && c1sq < 1.0) {
        return invalid(format!("c1sq must lie in (0, 1), got {c1sq}"));
    }
    check_e(e_plateau)?;
    let n = n_mutants + 1;
    let mut weights = vec![(1.0 - c1sq) / n_mutants as f64; n];
    weights[0] = c1sq;
    let c = match center {
        StarCenter::Original => 0,
        StarCenter::Mutant => 1,
    };
    let network = DetectorNetwork {
        detectors: vec![Detector {
            e_plateau,
            profile: CouplingProfile::Constant,
            configuration: (0..n).map(|s| u32::from(s == c)).collect(),
        }],
    };
    let p_center = match center {
        StarCenter::Original => original_center_asymptotic(n_mutants, c1sq),
        StarCenter::Mutant => mutant_center_asymptotic(c1sq),
    };
    let expected = vec![
        ExpectedOutcome {
            outcome: vec![c],
            probability: p_center,
            provenance: "large-n star asymptotic".into(),
        },
        ExpectedOutcome {
            outcome: (0..n).filter(|&k| k != c).collect(),
            probability: 1.0 - p_center,
            provenance: "large-n star asymptotic".into(),
        },
    ];
    let mut sc = from_network("biology_star", weights, &network, expected, "")?;
    sc.builder = Some(BuilderSpec::BiologyStar {
        n_mutants,
        c1sq,
        center,
        e_plateau,
    });
    Ok(sc)
}

/// `fig3b` in which detectors 1.. change their mass distribution from
/// `delta_t` on (linear rise over `rise`).
pub fn build_delayed_detectors(n: usize, e_plateau: f64, delta_t: f64, rise: f64) -> Result<Scenario, ScenarioError> {
    if n < 2 {
        return invalid("delayed detectors need at least 2 detectors");
    }
    check_e(e_plateau)?;
    if !(delta_t.is_finite() && delta_t >= 0.0 && rise.is_finite() && rise >= 0.0) {
        return invalid(format!("delta_t {delta_t} and rise {rise} must be non-negative"));
    }
    let mut detectors = one_detector_per_state(n, e_plateau, &CouplingProfile::Constant);
    for d in detectors.iter_mut().skip(1) {
        d.profile = CouplingProfile::Ramp { t_on: delta_t, t_rise: rise };
    }
    let mut sc = from_network(
        "delayed_detectors",
        vec![1.0 / n as f64; n],
        &DetectorNetwork { detectors },
        Vec::new(),
        "",
    )?;
    sc.builder = Some(BuilderSpec::DelayedDetectors {
        n_detectors: n,
        e_plateau,
        delta_t,
        rise,
    });
    Ok(sc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedSweep {
    /// `(Δt, p({0}))`.
    pub points: Vec<(f64, f64)>,
    /// Lifetime from a fit of the saturating exponential between `1/n` and
    /// `1/2`, if enough points lie inside the transition.
    pub fitted_lifetime: Option<f64>,
}

/// `p({0})` as a function of the delay after which the conserving
/// detectors of a `fig3b` scenario start changing their mass distribution.
pub fn delayed_detector_sweep(
    base: &Scenario,
    delta_ts: &[f64],
    rise: f64,
    consts: &PhysicalConstants,
) -> Result<DelayedSweep, ScenarioError> {
    let Some(BuilderSpec::Fig3b {
        n_detectors, e_plateau, ..
    }) = base.builder
    else {
        return invalid("delayed detector sweep needs a scenario built by fig3b");
    };
    let mut points = Vec::with_capacity(delta_ts.len());
    for &dt in delta_ts {
        let sc = build_delayed_detectors(n_detectors, e_plateau, dt, rise)?;
        let dist = cascade_distribution(&sc.superposition, &sc.profiles, consts)?;
        points.push((dt, dist.get(&[0])));
    }
    let fitted_lifetime = fit_saturation(&points, 1.0 / n_detectors as f64, 0.5);
    Ok(DelayedSweep {
        points,
        fitted_lifetime,
    })
}

/// Least-squares fit of `ln((p∞ − p)/(p∞ − p₀)) = ln A − t/τ`.
pub fn fit_saturation(points: &[(f64, f64)], p0: f64, p_inf: f64) -> Option<f64> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(t, p)| {
            let y = (p_inf - p) / (p_inf - p0);
            (y > 1e-9 && y <= 1.0 + 1e-9).then(|| (t, y.min(1.0).ln()))
        })
        .collect();
    if data.len() < 2 {
        return None;
    }
    let n = data.len() as f64;
    let mt = data.iter().map(|d| d.0).sum::<f64>() / n;
    let my = data.iter().map(|d| d.1).sum::<f64>() / n;
    let sxx: f64 = data.iter().map(|d| (d.0 - mt).powi(2)).sum();
    let sxy: f64 = data.iter().map(|d| (d.0 - mt) * (d.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// Number of runs needed to measure a probability to `target_dp`, given
/// `Δp ≈ 1.3 / √N` for `N` successful detections.
pub fn required_trials(target_dp: f64, quantum_efficiency: f64) -> Result<u64, ScenarioError> {
    if !(target_dp.is_finite() && target_dp > 0.0) {
        return invalid(format!("accuracy must be positive, got {target_dp}"));
    }
    if !(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0) {
        return invalid(format!("efficiency must lie in (0, 1], got {quantum_efficiency}"));
    }
    let successes = ceil_tolerant((1.3 / target_dp).powi(2));
    Ok(ceil_tolerant(successes as f64 / quantum_efficiency))
}

/// Ceiling that ignores rounding noise just above an integer.
fn ceil_tolerant(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Builders addressable by name, with their parameter names.
pub fn builder_names() -> BTreeMap<&'static str, &'static [&'static str]> {
    BTreeMap::from([
        ("fig3a", &["n_detectors", "e_plateau"][..]),
        ("fig3b", &["n_detectors", "e_plateau"][..]),
        ("two_detector_overlap", &["c1sq", "c2sq", "e_plateau"][..]),
        ("continuous_medium", &["n", "e_plateau"][..]),
        ("biology_star", &["n_mutants", "c1sq", "center", "e_plateau"][..]),
        ("delayed_detectors", &["n_detectors", "e_plateau", "delta_t", "rise"][..]),
    ])
}
