//! Monte Carlo simulation of the trigger race.
//!
//! Every directed pair is a Poisson process with intensity
//! `E_ij f_ij(t) |c_j|² / ħ`. The first event is drawn by thinning a
//! homogeneous process at the plateau total rate times
//! `thinning_bound_factor`; the pair is then drawn in proportion to the
//! instantaneous rates. After a non-terminal outcome the race restarts on
//! the surviving sub-superposition at the time of the event.
//!
//! Randomness: trial `k` uses `ChaCha8Rng::seed_from_u64(seed)` with its
//! stream set to `k`, so results do not depend on scheduling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::reduction::{CouplingProfile, ProfileSet, ReductionError, Superposition};

/// Identifier of the generator and stream derivation, recorded in reports.
pub const RNG_ID: &str = "chacha8 seed_from_u64(seed) stream=trial_index";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("invalid trial configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub seed: u64,
    pub n_trials: u64,
    /// Trials end at this time even when the cascade has not terminated.
    pub horizon: f64,
    #[serde(default = "default_bound_factor")]
    pub thinning_bound_factor: f64,
}

fn default_bound_factor() -> f64 {
    1.0
}

impl TrialConfig {
    /// Horizon long enough for a cascade through every state: the last
    /// profile breakpoint plus 20 plateau lifetimes per state.
    pub fn for_superposition(
        seed: u64,
        n_trials: u64,
        s: &Superposition,
        profiles: &ProfileSet,
        consts: &PhysicalConstants,
    ) -> Result<Self, MonteCarloError> {
        let last = crate::reduction::default_horizon(s, profiles, 0.0, consts)?;
        let lifetime = 1.0 / s.total_rate(consts);
        Ok(Self {
            seed,
            n_trials,
            horizon: last + 20.0 * lifetime * s.len() as f64,
            thinning_bound_factor: 1.0,
        })
    }

    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n_trials == 0 {
            return Err(MonteCarloError::InvalidConfig("n_trials must be at least 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(MonteCarloError::InvalidConfig(format!(
                "horizon must be finite and positive, got {}",
                self.horizon
            )));
        }
        if !(self.thinning_bound_factor.is_finite() && self.thinning_bound_factor >= 1.0) {
            return Err(MonteCarloError::InvalidConfig(format!(
                "thinning_bound_factor must be >= 1, got {}",
                self.thinning_bound_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    pub t: f64,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ThinningStats {
    pub proposals: u64,
    pub accepted: u64,
}

struct Group {
    profile: CouplingProfile,
    pairs: Vec<(usize, usize)>,
    cumulative: Vec<f64>,
    total: f64,
}

/// Precomputed race of one superposition.
pub struct Race {
    groups: Vec<Group>,
    bound: f64,
}

impl Race {
    /// `None` when no trigger has a nonzero rate.
    pub fn new(
        s: &Superposition,
        profiles: &ProfileSet,
        bound_factor: f64,
        consts: &PhysicalConstants,
    ) -> Option<Self> {
        let n = s.len();
        let resolved = profiles.resolve(n);
        let rates = s.trigger_rate_matrix(consts);
        let mut groups: Vec<Group> = resolved
            .profiles
            .iter()
            .map(|p| Group {
                profile: p.clone(),
                pairs: Vec::new(),
                cumulative: Vec::new(),
                total: 0.0,
            })
            .collect();
        for (i, row) in rates.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                if r > 0.0 {
                    let g = &mut groups[resolved.of(i, j)];
                    g.total += r;
                    g.pairs.push((i, j));
                    g.cumulative.push(g.total);
                }
            }
        }
        groups.retain(|g| g.total > 0.0);
        let plateau: f64 = groups.iter().map(|g| g.total).sum();
        (plateau > 0.0).then_some(Self {
            groups,
            bound: plateau * bound_factor,
        })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn total_rate(&self, t: f64) -> f64 {
        self.groups.iter().map(|g| g.total * g.profile.factor(t)).sum()
    }

    /// First trigger after `t0`, or `None` if none fires before `horizon`.
    pub fn sample<R: Rng>(&self, t0: f64, horizon: f64, rng: &mut R, stats: &mut ThinningStats) -> Option<TriggerEvent> {
        let mut t = t0;
        loop {
            let wait: f64 = rng.sample(Exp1);
            t += wait / self.bound;
            if t >= horizon {
                return None;
            }
            stats.proposals += 1;
            let weights: Vec<f64> = self.groups.iter().map(|g| g.total * g.profile.factor(t)).collect();
            let total: f64 = weights.iter().sum();
            let u = rng.random::<f64>() * self.bound;
            if u >= total {
                continue;
            }
            stats.accepted += 1;
            // Reuse the accepted uniform, which is uniform on [0, total).
            let mut x = u;
            let mut pick = self.groups.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if x < *w {
                    pick = k;
                    break;
                }
                x -= w;
            }
            let g = &self.groups[pick];
            let target = (x / weights[pick]).clamp(0.0, 1.0) * g.total;
            let idx = g.cumulative.partition_point(|&c| c <= target).min(g.pairs.len() - 1);
            let (i, j) = g.pairs[idx];
            return Some(TriggerEvent { t, i, j });
        }
    }
}

/// The generator of trial `trial_index`.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

pub fn sample_first_trigger<R: Rng>(
    s: &Superposition,
    profiles: &ProfileSet,
    t0: f64,
    horizon: f64,
    bound_factor: f64,
    rng: &mut R,
    consts: &PhysicalConstants,
) -> Option<TriggerEvent> {
    Race::new(s, profiles, bound_factor, consts)?.sample(t0, horizon, rng, &mut ThinningStats::default())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Surviving states (original indices).
    pub surviving: Vec<usize>,
    pub events: u32,
}

pub fn run_cascade_trial(
    s: &Superposition,
    profiles: &ProfileSet,
    config: &TrialConfig,
    trial_index: u64,
    consts: &PhysicalConstants,
) -> Result<TrialOutcome, MonteCarloError> {
    config.validate()?;
    profiles.validate(s.len())?;
    let root = Race::new(s, profiles, config.thinning_bound_factor, consts);
    run_trial(s, profiles, root.as_ref(), config, trial_index, consts)
}

fn run_trial(
    s: &Superposition,
    profiles: &ProfileSet,
    root: Option<&Race>,
    config: &TrialConfig,
    trial_index: u64,
    consts: &PhysicalConstants,
) -> Result<TrialOutcome, MonteCarloError> {
    let mut rng = trial_rng(config.seed, trial_index);
    let mut stats = ThinningStats::default();
    let mut labels: Vec<usize> = (0..s.len()).collect();
    let all = labels.clone();
    if s.is_terminal_set(&all) {
        return Ok(TrialOutcome {
            surviving: labels,
            events: 0,
        });
    }
    let Some(root) = root else {
        return Ok(TrialOutcome {
            surviving: labels,
            events: 0,
        });
    };
    let mut current = s.clone();
    let mut current_profiles = profiles.clone();
    let mut owned: Option<Race> = None;
    let mut t = 0.0;
    let mut events = 0;
    loop {
        let race = owned.as_ref().unwrap_or(root);
        let Some(ev) = race.sample(t, config.horizon, &mut rng, &mut stats) else {
            return Ok(TrialOutcome {
                surviving: labels,
                events,
            });
        };
        events += 1;
        t = ev.t;
        let out = current.apply_trigger(ev.i, ev.j)?;
        labels = out.surviving.iter().map(|&k| labels[k]).collect();
        if out.terminal {
            return Ok(TrialOutcome {
                surviving: labels,
                events,
            });
        }
        current = current.restrict(&out.surviving, &out.new_weights)?;
        current_profiles = current_profiles.restrict(&out.surviving);
        match Race::new(&current, &current_profiles, config.thinning_bound_factor, consts) {
            Some(r) => owned = Some(r),
            None => {
                return Ok(TrialOutcome {
                    surviving: labels,
                    events,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub surviving: Vec<usize>,
    pub count: u64,
    pub probability: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Sorted by surviving set.
    pub outcomes: Vec<McOutcome>,
    pub n_trials: u64,
    /// Trials in which no trigger fired before the horizon.
    pub n_no_event: u64,
    pub rng: String,
}

impl McEstimate {
    pub fn get(&self, surviving: &[usize]) -> Option<&McOutcome> {
        self.outcomes.iter().find(|o| o.surviving == surviving)
    }

    pub fn probability(&self, surviving: &[usize]) -> f64 {
        self.get(surviving).map_or(0.0, |o| o.probability)
    }
}

pub fn estimate(
    s: &Superposition,
    profiles: &ProfileSet,
    config: &TrialConfig,
    consts: &PhysicalConstants,
) -> Result<McEstimate, MonteCarloError> {
    config.validate()?;
    profiles.validate(s.len())?;
    let root = Race::new(s, profiles, config.thinning_bound_factor, consts);
    let counts = (0..config.n_trials)
        .into_par_iter()
        .map(|k| run_trial(s, profiles, root.as_ref(), config, k, consts))
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<Option<Vec<usize>>, u64>, r| {
            let r = r?;
            let key = (r.events > 0).then_some(r.surviving);
            *acc.entry(key).or_insert(0) += 1;
            Ok::<_, MonteCarloError>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    let n = config.n_trials as f64;
    let mut n_no_event = 0;
    let mut outcomes = Vec::new();
    for (key, count) in counts {
        match key {
            None => n_no_event = count,
            Some(surviving) => {
                let p = count as f64 / n;
                outcomes.push(McOutcome {
                    surviving,
                    count,
                    probability: p,
                    standard_error: (p * (1.0 - p) / n).sqrt(),
                });
            }
        }
    }
    Ok(McEstimate {
        outcomes,
        n_trials: config.n_trials,
        n_no_event,
        rng: RNG_ID.to_string(),
    })
}
