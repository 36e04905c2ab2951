//! Time dependence of the pair couplings.
//!
//! Every profile is a factor in `[0, 1]` that multiplies the plateau
//! coupling of a pair, and is piecewise linear in time so that the trigger
//! race can be integrated segment by segment.

use serde::{Deserialize, Serialize};

use super::ReductionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingProfile {
    #[default]
    Constant,
    /// Zero before `t_on`, then linear up to 1 over `t_rise`. A zero rise
    /// time is a step.
    Ramp { t_on: f64, t_rise: f64 },
    /// Linear interpolation between `(t, factor)` points, held constant
    /// outside the table.
    Table { points: Vec<(f64, f64)> },
    /// Weighted sum of profiles. Used when a pair coupling is the sum of
    /// contributions that switch on at different times.
    Mix { parts: Vec<(f64, CouplingProfile)> },
}

impl CouplingProfile {
    pub fn step(t_on: f64) -> Self {
        Self::Ramp { t_on, t_rise: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ReductionError> {
        let bad = |msg: String| Err(ReductionError::InvalidProfile(msg));
        match self {
            Self::Constant => Ok(()),
            Self::Ramp { t_on, t_rise } => {
                if !t_on.is_finite() || !(t_rise.is_finite() && *t_rise >= 0.0) {
                    return bad(format!("ramp needs finite t_on and t_rise >= 0, got {t_on}, {t_rise}"));
                }
                Ok(())
            }
            Self::Table { points } => {
                if points.is_empty() {
                    return bad("table profile has no points".into());
                }
                for (k, &(t, f)) in points.iter().enumerate() {
                    if !t.is_finite() || !(0.0..=1.0).contains(&f) {
                        return bad(format!("table point {k} = ({t}, {f}) outside finite time / [0, 1] factor"));
                    }
                    if k > 0 && t <= points[k - 1].0 {
                        return bad(format!("table times must strictly increase (point {k})"));
                    }
                }
                Ok(())
            }
            Self::Mix { parts } => {
                let mut total = 0.0;
                for (w, p) in parts {
                    if !(w.is_finite() && *w >= 0.0) {
                        return bad(format!("mix weight {w} must be finite and non-negative"));
                    }
                    p.validate()?;
                    total += w;
                }
                if total > 1.0 + 1e-12 {
                    return bad(format!("mix weights sum to {total} > 1"));
                }
                Ok(())
            }
        }
    }

    /// Factor at `t`. At a step the right-hand value is returned.
    pub fn factor(&self, t: f64) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Ramp { t_on, t_rise } => {
                if t < *t_on {
                    0.0
                } else if t >= t_on + t_rise {
                    1.0
                } else {
                    (t - t_on) / t_rise
                }
            }
            Self::Table { points } => {
                let k = points.partition_point(|&(pt, _)| pt <= t);
                if k == 0 {
                    points[0].1
                } else if k == points.len() {
                    points[k - 1].1
                } else {
                    let (t0, f0) = points[k - 1];
                    let (t1, f1) = points[k];
                    f0 + (f1 - f0) * (t - t0) / (t1 - t0)
                }
            }
            Self::Mix { parts } => parts.iter().map(|(w, p)| w * p.factor(t)).sum(),
        }
    }

    /// Largest factor the profile ever reaches.
    pub fn max_factor(&self) -> f64 {
        match self {
            Self::Constant | Self::Ramp { .. } => 1.0,
            Self::Table { points } => points.iter().map(|p| p.1).fold(0.0, f64::max),
            Self::Mix { parts } => parts.iter().map(|(w, p)| w * p.max_factor()).sum(),
        }
    }

    /// Times at which the slope may change.
    pub fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Self::Constant => {}
            Self::Ramp { t_on, t_rise } => {
                out.push(*t_on);
                out.push(t_on + t_rise);
            }
            Self::Table { points } => out.extend(points.iter().map(|p| p.0)),
            Self::Mix { parts } => parts.iter().for_each(|(_, p)| p.breakpoints(out)),
        }
    }

    /// One-sided limits `(f(a+), f(b−))` on an interval containing no
    /// breakpoint.
    pub(crate) fn segment(&self, a: f64, b: f64) -> (f64, f64) {
        let h = b - a;
        let f1 = self.factor(a + 0.25 * h);
        let f2 = self.factor(a + 0.75 * h);
        let quarter = 0.5 * (f2 - f1);
        (f1 - quarter, f2 + quarter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairProfile {
    pub i: usize,
    pub j: usize,
    pub profile: CouplingProfile,
}

/// Profiles for every pair of a superposition: one default plus per-pair
/// overrides (unordered, 0-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProfileSet {
    #[serde(default)]
    pub default: CouplingProfile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairProfile>,
}

impl ProfileSet {
    pub fn constant() -> Self {
        Self::default()
    }

    pub fn uniform(profile: CouplingProfile) -> Self {
        Self {
            default: profile,
            pairs: Vec::new(),
        }
    }

    pub fn with_pair(mut self, i: usize, j: usize, profile: CouplingProfile) -> Self {
        self.pairs.push(PairProfile { i, j, profile });
        self
    }

    pub fn validate(&self, n: usize) -> Result<(), ReductionError> {
        self.default.validate()?;
        for p in &self.pairs {
            if p.i >= n || p.j >= n || p.i == p.j {
                return Err(ReductionError::InvalidProfile(format!(
                    "pair ({}, {}) invalid for {n} states",
                    p.i, p.j
                )));
            }
            p.profile.validate()?;
        }
        Ok(())
    }

    /// Distinct profiles and, for every ordered pair, the index of its
    /// profile. Later overrides win.
    pub fn resolve(&self, n: usize) -> ResolvedProfiles {
        let mut profiles = vec![self.default.clone()];
        let mut index = vec![0usize; n * n];
        for p in &self.pairs {
            let k = match profiles.iter().position(|q| *q == p.profile) {
                Some(k) => k,
                None => {
                    profiles.push(p.profile.clone());
                    profiles.len() - 1
                }
            };
            index[p.i * n + p.j] = k;
            index[p.j * n + p.i] = k;
        }
        ResolvedProfiles { n, profiles, index }
    }

    /// Profiles of the sub-superposition made of `states`, reindexed.
    pub fn restrict(&self, states: &[usize]) -> Self {
        let pos = |s: usize| states.iter().position(|&x| x == s);
        Self {
            default: self.default.clone(),
            pairs: self
                .pairs
                .iter()
                .filter_map(|p| {
                    Some(PairProfile {
                        i: pos(p.i)?,
                        j: pos(p.j)?,
                        profile: p.profile.clone(),
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedProfiles {
    n: usize,
    pub profiles: Vec<CouplingProfile>,
    index: Vec<usize>,
}

impl ResolvedProfiles {
    pub fn of(&self, i: usize, j: usize) -> usize {
        self.index[i * self.n + j]
    }
}
