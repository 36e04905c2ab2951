//! Integration of the trigger race with time-dependent couplings.
//!
//! The total trigger rate is piecewise linear, so the survival probability
//! `S(t) = exp(−∫R)` is known in closed form on every segment. What is
//! integrated numerically is `∫ S(t) f_k(t) dt` for each distinct profile
//! `f_k`; every directed pair then gets its event probability as its
//! plateau rate times the integral of its profile.

use serde::{Deserialize, Serialize};

use super::profile::{ProfileSet, ResolvedProfiles};
use super::{ReductionError, Superposition};
use crate::constants::PhysicalConstants;
use crate::quadrature::GaussLegendre;

/// Residual survival above which the horizon is flagged as too short.
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 1e-6;
/// The default horizon covers this many plateau lifetimes past the last
/// profile breakpoint.
pub const DEFAULT_HORIZON_LIFETIMES: f64 = 20.0;

/// Below `exp(-745)` the survival probability is zero in f64.
const LOG_UNDERFLOW: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonStatus {
    Ok,
    /// More than the threshold of probability had no event by the horizon.
    HorizonTooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDepResult {
    /// Probability that state j is the target of the first trigger.
    pub probabilities: Vec<f64>,
    /// Probability of each directed first trigger, row i → column j.
    pub events: Vec<Vec<f64>>,
    /// Probability that no trigger fired before the horizon.
    pub residual: f64,
    pub status: HorizonStatus,
}

/// `t0 + ` the last breakpoint offset `+ 20` lifetimes at the total rate
/// reached after that breakpoint (the plateau rate if the profiles end at
/// zero).
pub fn default_horizon(
    s: &Superposition,
    profiles: &ProfileSet,
    t0: f64,
    consts: &PhysicalConstants,
) -> Result<f64, ReductionError> {
    let total = s.total_rate(consts);
    if total <= 0.0 {
        return Err(ReductionError::NoDecay);
    }
    let n = s.len();
    let resolved = profiles.resolve(n);
    let mut bps = Vec::new();
    for p in &resolved.profiles {
        p.breakpoints(&mut bps);
    }
    let last = bps.into_iter().fold(t0, f64::max);
    let rates = s.trigger_rate_matrix(consts);
    let mut final_rate = 0.0;
    for i in 0..n {
        for j in 0..n {
            if rates[i][j] > 0.0 {
                final_rate += rates[i][j] * resolved.profiles[resolved.of(i, j)].factor(last);
            }
        }
    }
    let rate = if final_rate > 0.0 { final_rate } else { total };
    Ok(last + DEFAULT_HORIZON_LIFETIMES / rate)
}

pub fn timedep_probabilities(
    s: &Superposition,
    profiles: &ProfileSet,
    t0: f64,
    horizon: f64,
    consts: &PhysicalConstants,
) -> Result<TimeDepResult, ReductionError> {
    timedep_probabilities_with(s, profiles, t0, horizon, DEFAULT_RESIDUAL_THRESHOLD, consts)
}

pub fn timedep_probabilities_with(
    s: &Superposition,
    profiles: &ProfileSet,
    t0: f64,
    horizon: f64,
    residual_threshold: f64,
    consts: &PhysicalConstants,
) -> Result<TimeDepResult, ReductionError> {
    let n = s.len();
    profiles.validate(n)?;
    if !(t0.is_finite() && horizon.is_finite() && horizon > t0) {
        return Err(ReductionError::InvalidHorizon { t0, horizon });
    }
    let resolved = profiles.resolve(n);
    let rates = s.trigger_rate_matrix(consts);
    let (integrals, residual) = race_integrals(&rates, &resolved, t0, horizon);
    let mut events = vec![vec![0.0; n]; n];
    let mut probabilities = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if rates[i][j] > 0.0 {
                let p = rates[i][j] * integrals[resolved.of(i, j)];
                events[i][j] = p;
                probabilities[j] += p;
            }
        }
    }
    let status = if residual > residual_threshold {
        HorizonStatus::HorizonTooShort
    } else {
        HorizonStatus::Ok
    };
    Ok(TimeDepResult {
        probabilities,
        events,
        residual,
        status,
    })
}

/// `∫ S(t) f_k(t) dt` over `[t0, horizon]` for every profile, and the
/// survival at the horizon.
fn race_integrals(
    rates: &[Vec<f64>],
    resolved: &ResolvedProfiles,
    t0: f64,
    horizon: f64,
) -> (Vec<f64>, f64) {
    let n = rates.len();
    let k_count = resolved.profiles.len();
    let mut plateau = vec![0.0; k_count];
    for (i, row) in rates.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r > 0.0 {
                plateau[resolved.of(i, j)] += r;
            }
        }
    }
    debug_assert_eq!(n, rates.len());

    let mut cuts = vec![t0, horizon];
    for p in &resolved.profiles {
        p.breakpoints(&mut cuts);
    }
    cuts.retain(|t| (t0..=horizon).contains(t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let gl = GaussLegendre::of_order(16);
    let mut integrals = vec![0.0; k_count];
    let mut log_s: f64 = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let limits: Vec<(f64, f64)> = resolved.profiles.iter().map(|p| p.segment(a, b)).collect();
        let ra: f64 = plateau.iter().zip(&limits).map(|(c, l)| c * l.0).sum();
        let rb: f64 = plateau.iter().zip(&limits).map(|(c, l)| c * l.1).sum();
        let flat = limits.iter().all(|l| l.0 == l.1);
        if flat {
            let s_a = log_s.exp();
            let occupancy = if ra > 0.0 { -(-ra * len).exp_m1() / ra } else { len };
            for (acc, l) in integrals.iter_mut().zip(&limits) {
                *acc += s_a * l.0 * occupancy;
            }
            log_s -= ra * len;
        } else {
            let slope = (rb - ra) / len;
            let rate_at = |tau: f64| ra + slope * tau;
            let exponent = |tau: f64| ra * tau + 0.5 * slope * tau * tau;
            let mut u = 0.0;
            while u < len && log_s - exponent(u) > LOG_UNDERFLOW {
                let r_u = rate_at(u).max(0.0);
                let mut h = len - u;
                if r_u > 0.0 {
                    h = h.min(0.5 / r_u);
                }
                if slope.abs() > 0.0 {
                    h = h.min(1.0 / slope.abs().sqrt());
                }
                let v = u + h;
                for (tau, wq) in gl.mapped(u, v) {
                    let surv = (log_s - exponent(tau)).exp() * wq;
                    for (acc, l) in integrals.iter_mut().zip(&limits) {
                        *acc += surv * (l.0 + (l.1 - l.0) * tau / len);
                    }
                }
                u = v;
            }
            log_s -= exponent(len);
        }
        if log_s < LOG_UNDERFLOW {
            log_s = f64::NEG_INFINITY;
            break;
        }
    }
    (integrals, log_s.exp())
}
