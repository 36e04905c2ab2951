//! Trigger rates, reduction probabilities and the outcome rule.
//!
//! A superposition of `n` states carries weights `|cᵢ|²` and a symmetric
//! coupling matrix `E_ij` in joules. The trigger `i → j` fires at rate
//! `E_ij |c_j|² / ħ`; the first trigger decides which states survive.
//! State indices are 0-based throughout.

mod profile;
mod timedep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::massdist::{potential_energy, MassDistError, MassDistribution, QuadratureConfig};

pub use profile::{CouplingProfile, PairProfile, ProfileSet, ResolvedProfiles};
pub use timedep::{
    default_horizon, timedep_probabilities, timedep_probabilities_with, HorizonStatus, TimeDepResult,
    DEFAULT_HORIZON_LIFETIMES, DEFAULT_RESIDUAL_THRESHOLD,
};

/// Couplings below this fraction of the largest entry count as zero.
pub const DEFAULT_ZERO_COUPLING_REL: f64 = 1e-12;
/// Tolerance on `Σ|cᵢ|² = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("invalid superposition: {0}")]
    InvalidSuperposition(String),
    #[error("invalid coupling profile: {0}")]
    InvalidProfile(String),
    #[error("all trigger rates vanish: the superposition is stable")]
    NoDecay,
    #[error("invalid trigger {i} -> {j}: {reason}")]
    InvalidTrigger { i: usize, j: usize, reason: &'static str },
    #[error("invalid time window [{t0}, {horizon}]")]
    InvalidHorizon { t0: f64, horizon: f64 },
    #[error("state {state}: couplings give rate {direct:e} 1/s, distributions give {via_potential:e} 1/s")]
    Consistency {
        state: usize,
        direct: f64,
        via_potential: f64,
    },
    #[error(transparent)]
    MassDist(#[from] MassDistError),
}

/// Weights and couplings of a superposition. Couplings below the zero
/// threshold are stored as exact zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperpositionData", into = "SuperpositionData")]
pub struct Superposition {
    weights: Vec<f64>,
    couplings: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperpositionData {
    weights: Vec<f64>,
    couplings: Vec<Vec<f64>>,
}

impl TryFrom<SuperpositionData> for Superposition {
    type Error = ReductionError;

    fn try_from(d: SuperpositionData) -> Result<Self, Self::Error> {
        Superposition::new(d.weights, d.couplings)
    }
}

impl From<Superposition> for SuperpositionData {
    fn from(s: Superposition) -> Self {
        Self {
            weights: s.weights,
            couplings: s.couplings,
        }
    }
}

impl Superposition {
    pub fn new(weights: Vec<f64>, couplings: Vec<Vec<f64>>) -> Result<Self, ReductionError> {
        Self::with_zero_threshold(weights, couplings, DEFAULT_ZERO_COUPLING_REL)
    }

    pub fn with_zero_threshold(
        weights: Vec<f64>,
        mut couplings: Vec<Vec<f64>>,
        zero_rel: f64,
    ) -> Result<Self, ReductionError> {
        let bad = |msg: String| Err(ReductionError::InvalidSuperposition(msg));
        let n = weights.len();
        if n == 0 {
            return bad("no states".into());
        }
        if couplings.len() != n || couplings.iter().any(|r| r.len() != n) {
            return bad(format!("coupling matrix must be {n}x{n}"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return bad(format!("weight {i} = {w} must be finite and non-negative"));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return bad(format!("weights sum to {sum}, not 1"));
        }
        let mut max = 0.0f64;
        for (i, row) in couplings.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                if !(e.is_finite() && e >= 0.0) {
                    return bad(format!("coupling ({i}, {j}) = {e} must be finite and non-negative"));
                }
                max = max.max(e);
            }
        }
        let tol = 1e-12 * max;
        for i in 0..n {
            if couplings[i][i] != 0.0 {
                return bad(format!("coupling ({i}, {i}) must be zero"));
            }
            for j in 0..i {
                if (couplings[i][j] - couplings[j][i]).abs() > tol {
                    return bad(format!("coupling matrix not symmetric at ({j}, {i})"));
                }
            }
        }
        let zero = zero_rel * max;
        for i in 0..n {
            for j in 0..i {
                let e = 0.5 * (couplings[i][j] + couplings[j][i]);
                let e = if e <= zero { 0.0 } else { e };
                couplings[i][j] = e;
                couplings[j][i] = e;
            }
        }
        Ok(Self { weights, couplings })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn couplings(&self) -> &[Vec<f64>] {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i][j]
    }

    /// Same couplings multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self, ReductionError> {
        let couplings = self
            .couplings
            .iter()
            .map(|r| r.iter().map(|e| e * lambda).collect())
            .collect();
        Self::new(self.weights.clone(), couplings)
    }

    /// Sub-superposition on `states` with the given weights (renormalized).
    pub fn restrict(&self, states: &[usize], weights: &[f64]) -> Result<Self, ReductionError> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(ReductionError::InvalidSuperposition("restricted weights vanish".into()));
        }
        let couplings = states
            .iter()
            .map(|&a| states.iter().map(|&b| self.couplings[a][b]).collect())
            .collect();
        Ok(Self {
            weights: weights.iter().map(|w| w / total).collect(),
            couplings,
        })
    }

    /// Whether no pair of states is coupled.
    pub fn is_stable(&self) -> bool {
        self.couplings.iter().flatten().all(|&e| e == 0.0)
    }

    /// Entry (i, j) is the rate of the trigger `i → j`, `E_ij |c_j|² / ħ`.
    pub fn trigger_rate_matrix(&self, consts: &PhysicalConstants) -> Vec<Vec<f64>> {
        self.couplings
            .iter()
            .map(|row| row.iter().zip(&self.weights).map(|(e, w)| consts.rate(e * w)).collect())
            .collect()
    }

    /// Row sums of the trigger matrix.
    pub fn state_decay_rates(&self, consts: &PhysicalConstants) -> Vec<f64> {
        self.trigger_rate_matrix(consts).iter().map(|r| r.iter().sum()).collect()
    }

    /// Column sums of the trigger matrix.
    pub fn reduction_rates(&self, consts: &PhysicalConstants) -> Vec<f64> {
        let m = self.trigger_rate_matrix(consts);
        (0..self.len()).map(|j| m.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total_rate(&self, consts: &PhysicalConstants) -> f64 {
        self.reduction_rates(consts).iter().sum()
    }

    /// Probability that state j is the target of the first trigger when
    /// all couplings share one time dependence: `p_j ∝ (Σ_i E_ij)|c_j|²`.
    pub fn static_probabilities(&self) -> Result<Vec<f64>, ReductionError> {
        let n = self.len();
        let weighted: Vec<f64> = (0..n)
            .map(|j| self.couplings.iter().map(|r| r[j]).sum::<f64>() * self.weights[j])
            .collect();
        let total: f64 = weighted.iter().sum();
        if total <= 0.0 {
            return Err(ReductionError::NoDecay);
        }
        Ok(weighted.iter().map(|w| w / total).collect())
    }

    /// Probability of each directed trigger `i → j` being the first one,
    /// for a common time dependence.
    pub fn static_event_probabilities(&self) -> Result<Vec<Vec<f64>>, ReductionError> {
        let mut total = 0.0;
        let events: Vec<Vec<f64>> = self
            .couplings
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.weights)
                    .map(|(e, w)| {
                        total += e * w;
                        e * w
                    })
                    .collect()
            })
            .collect();
        if total <= 0.0 {
            return Err(ReductionError::NoDecay);
        }
        Ok(events
            .into_iter()
            .map(|r| r.into_iter().map(|p| p / total).collect())
            .collect())
    }

    /// States that survive a trigger into `j`: `j` and every state not
    /// coupled to it.
    pub fn survivors(&self, j: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&m| m == j || self.couplings[m][j] == 0.0)
            .collect()
    }

    pub fn is_terminal_set(&self, states: &[usize]) -> bool {
        states.len() == 1
            || states
                .iter()
                .all(|&a| states.iter().all(|&b| self.couplings[a][b] == 0.0))
    }

    /// Outcome of the trigger `i → j`.
    ///
    /// Every state coupled to `j`, including `i`, vanishes. Vanished states
    /// other than `i` hand their weight to `j`; `i` splits its weight among
    /// the survivors it is coupled to, in proportion to `E_im |c_m|²`.
    pub fn apply_trigger(&self, i: usize, j: usize) -> Result<ReductionOutcome, ReductionError> {
        let n = self.len();
        if i >= n || j >= n || i == j {
            return Err(ReductionError::InvalidTrigger {
                i,
                j,
                reason: "indices out of range or equal",
            });
        }
        if self.couplings[i][j] <= 0.0 {
            return Err(ReductionError::InvalidTrigger {
                i,
                j,
                reason: "states are not coupled",
            });
        }
        if self.weights[j] <= 0.0 {
            return Err(ReductionError::InvalidTrigger {
                i,
                j,
                reason: "target state has zero weight",
            });
        }
        let surviving = self.survivors(j);
        let mut weights: Vec<f64> = surviving.iter().map(|&m| self.weights[m]).collect();
        let jpos = surviving.iter().position(|&m| m == j).expect("target survives");
        for k in 0..n {
            if k != i && k != j && self.couplings[k][j] > 0.0 {
                weights[jpos] += self.weights[k];
            }
        }
        let shares: Vec<f64> = surviving
            .iter()
            .map(|&m| self.couplings[i][m] * self.weights[m])
            .collect();
        let share_total: f64 = shares.iter().sum();
        for (w, s) in weights.iter_mut().zip(&shares) {
            *w += self.weights[i] * s / share_total;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let terminal = self.is_terminal_set(&surviving);
        Ok(ReductionOutcome {
            surviving,
            new_weights: weights,
            terminal,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionOutcome {
    pub surviving: Vec<usize>,
    pub new_weights: Vec<f64>,
    pub terminal: bool,
}

/// Probability of each surviving state set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeDistribution(BTreeMap<Vec<usize>, f64>);

impl OutcomeDistribution {
    pub fn add(&mut self, outcome: Vec<usize>, p: f64) {
        *self.0.entry(outcome).or_insert(0.0) += p;
    }

    pub fn get(&self, outcome: &[usize]) -> f64 {
        self.0.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.0.iter()
    }
}

impl FromIterator<(Vec<usize>, f64)> for OutcomeDistribution {
    fn from_iter<T: IntoIterator<Item = (Vec<usize>, f64)>>(iter: T) -> Self {
        let mut d = Self::default();
        for (o, p) in iter {
            d.add(o, p);
        }
        d
    }
}

/// Probability of every surviving set after one trigger, with all
/// couplings sharing a time dependence.
pub fn outcome_distribution(s: &Superposition) -> Result<OutcomeDistribution, ReductionError> {
    let raw = raw_static_events(s);
    let n = s.len();
    // The surviving set depends on the target only. Outcome masses are
    // summed before normalizing so that symmetric fixtures come out exact.
    let mut mass: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for j in 0..n {
        let into_j: f64 = (0..n).map(|i| raw[i][j]).sum();
        if into_j > 0.0 {
            *mass.entry(s.survivors(j)).or_insert(0.0) += into_j;
        }
    }
    let total: f64 = mass.values().sum();
    if total <= 0.0 {
        return Err(ReductionError::NoDecay);
    }
    Ok(mass.into_iter().map(|(k, m)| (k, m / total)).collect())
}

fn raw_static_events(s: &Superposition) -> Vec<Vec<f64>> {
    s.couplings
        .iter()
        .map(|row| row.iter().zip(&s.weights).map(|(e, w)| e * w).collect())
        .collect()
}

/// Unnormalized first-trigger weights under `profiles`. Shared time
/// dependence gives `E_ij |c_j|²`; otherwise the race is integrated.
fn event_weights(
    s: &Superposition,
    profiles: &ProfileSet,
    consts: &PhysicalConstants,
) -> Result<Vec<Vec<f64>>, ReductionError> {
    if shares_one_shape(s, profiles) {
        return Ok(raw_static_events(s));
    }
    let horizon = default_horizon(s, profiles, 0.0, consts)?;
    Ok(timedep_probabilities(s, profiles, 0.0, horizon, consts)?.events)
}

/// Whether every coupled pair uses the same profile.
pub fn shares_one_shape(s: &Superposition, profiles: &ProfileSet) -> bool {
    let n = s.len();
    let resolved = profiles.resolve(n);
    let mut shape = None;
    for i in 0..n {
        for j in 0..i {
            if s.coupling(i, j) > 0.0 {
                let k = resolved.of(i, j);
                match shape {
                    None => shape = Some(k),
                    Some(prev) if prev != k => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

/// Distribution over terminal surviving sets, re-expanding non-terminal
/// outcomes on their sub-superposition until every branch terminates.
///
/// Each deeper race is started at time 0 of its profiles. This is exact
/// when the couplings inside every sub-superposition share one time
/// dependence, which holds for all builders in [`crate::scenarios`].
pub fn cascade_distribution(
    s: &Superposition,
    profiles: &ProfileSet,
    consts: &PhysicalConstants,
) -> Result<OutcomeDistribution, ReductionError> {
    profiles.validate(s.len())?;
    let mut dist = OutcomeDistribution::default();
    let all: Vec<usize> = (0..s.len()).collect();
    cascade_into(s, profiles, &all, 1.0, consts, &mut dist)?;
    Ok(dist)
}

enum Branch {
    Terminal(Vec<usize>),
    Event(usize, usize),
}

fn cascade_into(
    s: &Superposition,
    profiles: &ProfileSet,
    labels: &[usize],
    scale: f64,
    consts: &PhysicalConstants,
    dist: &mut OutcomeDistribution,
) -> Result<(), ReductionError> {
    let raw = event_weights(s, profiles, consts)?;
    let n = s.len();
    let mut terminal: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut branches = Vec::new();
    for j in 0..n {
        let surviving = s.survivors(j);
        if s.is_terminal_set(&surviving) {
            let into_j: f64 = (0..n).map(|i| raw[i][j]).sum();
            if into_j > 0.0 {
                *terminal.entry(surviving).or_insert(0.0) += into_j;
            }
        } else {
            for (i, row) in raw.iter().enumerate() {
                if row[j] > 0.0 {
                    branches.push((Branch::Event(i, j), row[j]));
                }
            }
        }
    }
    branches.extend(terminal.into_iter().map(|(k, m)| (Branch::Terminal(k), m)));
    let total: f64 = branches.iter().map(|b| b.1).sum();
    if total <= 0.0 {
        return Err(ReductionError::NoDecay);
    }
    let label = |set: &[usize]| set.iter().map(|&k| labels[k]).collect::<Vec<_>>();
    for (branch, mass) in branches {
        let p = scale * (mass / total);
        match branch {
            Branch::Terminal(set) => dist.add(label(&set), p),
            Branch::Event(i, j) => {
                let out = s.apply_trigger(i, j)?;
                let sub = s.restrict(&out.surviving, &out.new_weights)?;
                if sub.is_stable() || sub.static_event_probabilities().is_err() {
                    dist.add(label(&out.surviving), p);
                    continue;
                }
                cascade_into(
                    &sub,
                    &profiles.restrict(&out.surviving),
                    &label(&out.surviving),
                    p,
                    consts,
                    dist,
                )?;
            }
        }
    }
    Ok(())
}

/// `ħ / E_G`; infinite when the coupling vanishes.
pub fn two_state_lifetime(e_g: f64, consts: &PhysicalConstants) -> f64 {
    if e_g > 0.0 {
        consts.hbar / e_g
    } else {
        f64::INFINITY
    }
}

/// Decay rates per state from the distributions realizing the states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPotentialRates {
    /// Energy of each state in the mean potential, against its own and
    /// the mean self-energy. Equal to [`Superposition::state_decay_rates`].
    pub exact: Vec<f64>,
    /// Twice the energy difference in the mean potential, assuming all
    /// self-energies are equal.
    pub approximate: Vec<f64>,
}

/// Relative tolerance of the consistency check, measured against the size
/// of the individual energy terms.
pub const MEAN_POTENTIAL_CONSISTENCY: f64 = 1e-2;

pub fn decay_rate_via_mean_potential(
    s: &Superposition,
    dists: &[MassDistribution],
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<MeanPotentialRates, ReductionError> {
    let n = s.len();
    if dists.len() != n {
        return Err(ReductionError::InvalidSuperposition(format!(
            "{} distributions for {n} states",
            dists.len()
        )));
    }
    // u[i][j] = ∫ρ_i φ_j (negative).
    let mut u = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let e = potential_energy(&dists[i], &dists[j], cfg, consts)?;
            u[i][j] = e;
            u[j][i] = e;
        }
    }
    let w = s.weights();
    let mean_self: f64 = (0..n).map(|j| w[j] * u[j][j]).sum();
    let direct = s.state_decay_rates(consts);
    let mut exact = Vec::with_capacity(n);
    let mut approximate = Vec::with_capacity(n);
    for i in 0..n {
        let in_mean: f64 = (0..n).map(|j| w[j] * u[i][j]).sum();
        let e_exact = (in_mean - u[i][i]) + (in_mean - mean_self);
        let e_approx = 2.0 * (in_mean - u[i][i]);
        let rate = consts.rate(consts.xi * e_exact);
        let scale = consts.rate(consts.xi * (u[i][i].abs() + mean_self.abs()));
        if (rate - direct[i]).abs() > MEAN_POTENTIAL_CONSISTENCY * scale.max(direct[i]) {
            return Err(ReductionError::Consistency {
                state: i,
                direct: direct[i],
                via_potential: rate,
            });
        }
        exact.push(rate);
        approximate.push(consts.rate(consts.xi * e_approx));
    }
    Ok(MeanPotentialRates { exact, approximate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityProbe {
    /// Static probabilities of the three-state superposition as `|c₃|² → 0`.
    pub limit: [f64; 3],
    /// Static probabilities of the two-state superposition without state 3.
    pub reduced: [f64; 2],
    pub discontinuous: bool,
}

/// Compares the three-state probabilities in the limit of a vanishing third
/// weight with the two-state result. The limit keeps the third state's
/// couplings in the column sums of the first two, so the two differ unless
/// `E₁₃ |c₁|²`-type terms are balanced.
pub fn discontinuity_probe(couplings: [[f64; 3]; 3], w1: f64, w2: f64) -> Result<DiscontinuityProbe, ReductionError> {
    let total = w1 + w2;
    let (w1, w2) = (w1 / total, w2 / total);
    let three = Superposition::new(vec![w1, w2, 0.0], couplings.iter().map(|r| r.to_vec()).collect())?;
    let p = three.static_probabilities()?;
    let two = Superposition::new(
        vec![w1, w2],
        vec![vec![0.0, couplings[0][1]], vec![couplings[1][0], 0.0]],
    )?;
    let q = two.static_probabilities()?;
    let discontinuous = (p[0] - q[0]).abs() > 1e-12 || (p[1] - q[1]).abs() > 1e-12;
    Ok(DiscontinuityProbe {
        limit: [p[0], p[1], p[2]],
        reduced: [q[0], q[1]],
        discontinuous,
    })
}
