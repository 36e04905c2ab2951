mod support {
    pub mod exact_cascade;
}

use proptest::prelude::*;
use reductionlab_core::massdist::{pair_eg, MassDistribution};
use reductionlab_core::reduction::*;
use reductionlab_core::{PhysicalConstants, QuadratureConfig, Vec3};
use support::exact_cascade::{exact_cascade, q, to_f64, Q};

const E: f64 = 1e-30;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(i, j) }).collect()).collect()
}

fn fig3a(n: usize) -> Superposition {
    Superposition::new(vec![1.0 / n as f64; n], matrix(n, |_, _| 2.0 * E)).unwrap()
}

fn fig3b(n: usize) -> Superposition {
    Superposition::new(vec![1.0 / n as f64; n], matrix(n, |i, j| if i == 0 || j == 0 { E } else { 0.0 })).unwrap()
}

fn three_state() -> Superposition {
    Superposition::new(
        vec![0.25, 0.25, 0.5],
        vec![vec![0.0, 2.0 * E, E], vec![2.0 * E, 0.0, E], vec![E, E, 0.0]],
    )
    .unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn trigger_rates_two_state_calibration() {
    let c = consts();
    let s = Superposition::new(vec![0.3, 0.7], matrix(2, |_, _| E)).unwrap();
    let m = s.trigger_rate_matrix(&c);
    assert_eq!(m[0][1], c.rate(E * 0.7));
    assert_eq!(m[1][0], c.rate(E * 0.3));
    assert_eq!(m[0][0], 0.0);
    let decay = s.state_decay_rates(&c);
    assert!((decay.iter().sum::<f64>() - c.rate(E)).abs() < 1e-12 * c.rate(E));
    assert_close(&s.static_probabilities().unwrap(), &[0.3, 0.7], 1e-15);
}

#[test]
fn zero_weight_column_vanishes() {
    let s = Superposition::new(vec![0.5, 0.5, 0.0], matrix(3, |_, _| E)).unwrap();
    let m = s.trigger_rate_matrix(&consts());
    assert!(m.iter().all(|r| r[2] == 0.0));
}

#[test]
fn fig3b_rates() {
    let c = consts();
    let s = fig3b(4);
    let m = s.trigger_rate_matrix(&c);
    let nonzero = m.iter().flatten().filter(|&&r| r > 0.0).count();
    assert_eq!(nonzero, 6);
    assert!(m.iter().flatten().filter(|&&r| r > 0.0).all(|&r| r == c.rate(E * 0.25)));
    let unit = c.rate(E * 0.25);
    assert_close(&s.state_decay_rates(&c).iter().map(|r| r / unit).collect::<Vec<_>>(), &[3.0, 1.0, 1.0, 1.0], 1e-12);
    assert_close(&s.reduction_rates(&c).iter().map(|r| r / unit).collect::<Vec<_>>(), &[3.0, 1.0, 1.0, 1.0], 1e-12);
}

#[test]
fn zero_couplings_are_stable() {
    let s = Superposition::new(vec![0.5, 0.5], matrix(2, |_, _| 0.0)).unwrap();
    assert_eq!(s.state_decay_rates(&consts()), vec![0.0, 0.0]);
    assert_eq!(s.static_probabilities(), Err(ReductionError::NoDecay));
    assert!(s.is_stable());
}

#[test]
fn single_coupling_only_touches_its_states() {
    let s = Superposition::new(vec![0.25; 4], matrix(4, |i, j| if i + j == 1 { E } else { 0.0 })).unwrap();
    let r = s.reduction_rates(&consts());
    assert!(r[0] > 0.0 && r[1] > 0.0 && r[2] == 0.0 && r[3] == 0.0);
}

#[test]
fn static_probability_fixtures() {
    assert_close(&fig3b(4).static_probabilities().unwrap(), &[0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0], 1e-12);
    assert_close(&three_state().static_probabilities().unwrap(), &[0.3, 0.3, 0.4], 1e-12);
    assert_close(&fig3a(4).static_probabilities().unwrap(), &[0.25; 4], 1e-15);
}

#[test]
fn apply_trigger_fixtures() {
    let out = fig3a(4).apply_trigger(2, 0).unwrap();
    assert_eq!(out.surviving, vec![0]);
    assert_eq!(out.new_weights, vec![1.0]);
    assert!(out.terminal);

    let out = fig3b(4).apply_trigger(0, 1).unwrap();
    assert_eq!(out.surviving, vec![1, 2, 3]);
    assert!(out.terminal);
    assert!((out.new_weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    // State 1 streams to 2, 3, 4 alike.
    assert_close(&out.new_weights, &[1.0 / 3.0; 3], 1e-15);

    let out = fig3b(4).apply_trigger(1, 0).unwrap();
    assert_eq!(out.surviving, vec![0]);
    assert!(out.terminal);
}

#[test]
fn apply_trigger_weight_redistribution() {
    // Chain 0–1–2: trigger 0 → 1 removes 0 and 2.
    let s = Superposition::new(vec![0.2, 0.3, 0.5], matrix(3, |i, j| if i.abs_diff(j) == 1 { E } else { 0.0 })).unwrap();
    let out = s.apply_trigger(0, 1).unwrap();
    assert_eq!(out.surviving, vec![1]);
    // Trigger 1 → 0: state 2 is uncoupled from 0 and survives; state 1
    // streams to 0 and 2 by E·|c|².
    let out = s.apply_trigger(1, 0).unwrap();
    assert_eq!(out.surviving, vec![0, 2]);
    assert!(out.terminal);
    let to0 = 0.3 * (0.2 / 0.7);
    let to2 = 0.3 * (0.5 / 0.7);
    assert_close(&out.new_weights, &[0.2 + to0, 0.5 + to2], 1e-15);
}

#[test]
fn invalid_triggers() {
    let s = fig3b(4);
    assert!(matches!(s.apply_trigger(1, 2), Err(ReductionError::InvalidTrigger { .. })));
    assert!(matches!(s.apply_trigger(1, 1), Err(ReductionError::InvalidTrigger { .. })));
    assert!(matches!(s.apply_trigger(0, 9), Err(ReductionError::InvalidTrigger { .. })));
    let z = Superposition::new(vec![1.0, 0.0], matrix(2, |_, _| E)).unwrap();
    assert!(matches!(z.apply_trigger(0, 1), Err(ReductionError::InvalidTrigger { .. })));
}

#[test]
fn outcome_distribution_fixtures() {
    let d = outcome_distribution(&fig3b(4)).unwrap();
    assert_eq!(d.len(), 2);
    assert!((d.get(&[0]) - 0.5).abs() < 1e-15);
    assert!((d.get(&[1, 2, 3]) - 0.5).abs() < 1e-15);

    let weights = [0.1, 0.2, 0.3, 0.4];
    let s = Superposition::new(weights.to_vec(), matrix(4, |_, _| E)).unwrap();
    let d = outcome_distribution(&s).unwrap();
    for (k, w) in weights.iter().enumerate() {
        assert!((d.get(&[k]) - w).abs() < 1e-15);
    }

    let d = outcome_distribution(&fig3b(8)).unwrap();
    assert!((d.get(&[0]) - 0.5).abs() < 1e-15);
    assert!((d.get(&(1..8).collect::<Vec<_>>()) - 0.5).abs() < 1e-15);
}

#[test]
fn cascade_fixtures() {
    let c = consts();
    let p = ProfileSet::constant();
    assert_eq!(cascade_distribution(&fig3b(4), &p, &c).unwrap(), outcome_distribution(&fig3b(4)).unwrap());
    let s = three_state();
    assert_eq!(cascade_distribution(&s, &p, &c).unwrap(), outcome_distribution(&s).unwrap());

    let chain = Superposition::new(vec![1.0 / 3.0; 3], matrix(3, |i, j| if i.abs_diff(j) == 1 { E } else { 0.0 })).unwrap();
    let d = cascade_distribution(&chain, &p, &c).unwrap();
    let keys: Vec<_> = d.iter().map(|(k, _)| k.clone()).collect();
    assert_eq!(keys, vec![vec![0, 2], vec![1]]);
    let exact = exact_cascade(
        &[
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1), q(1, 1)],
            vec![q(0, 1), q(1, 1), q(0, 1)],
        ],
        &[q(1, 3), q(1, 3), q(1, 3)],
    );
    for (k, v) in &exact {
        assert!((d.get(k) - to_f64(v)).abs() < 1e-14, "{k:?}");
    }
    // Hand count: events 0→1 and 2→1 (1/4 each) give {1}; 1→0 and 1→2 give
    // {0, 2} (terminal, uncoupled).
    assert!((d.get(&[1]) - 0.5).abs() < 1e-15);
    assert!((d.get(&[0, 2]) - 0.5).abs() < 1e-15);
}

#[test]
fn lifetimes() {
    let c = consts();
    let tau = two_state_lifetime(c.hbar * 1e9, &c);
    assert!((tau - 1e-9).abs() < 1e-24);
}

#[test]
fn discontinuity_probe_fixtures() {
    let sym = discontinuity_probe([[0.0, 1.0, 2.0], [1.0, 0.0, 2.0], [2.0, 2.0, 0.0]], 0.3, 0.7).unwrap();
    assert!(!sym.discontinuous);
    let asym = discontinuity_probe([[0.0, 1.0, 2.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], 0.5, 0.5).unwrap();
    assert!(asym.discontinuous);
    assert!((asym.limit[0] - 0.75).abs() < 1e-15);
    assert_eq!(asym.limit[2], 0.0);
    assert_close(&asym.reduced, &[0.5, 0.5], 1e-15);
    let near = Superposition::new(
        vec![0.5, 0.5 - 1e-9, 1e-9],
        vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]],
    )
    .unwrap();
    assert!(near.static_probabilities().unwrap()[2] < 1e-8);
}

#[test]
fn constant_race_matches_static() {
    let c = consts();
    let s = three_state();
    let total = s.total_rate(&c);
    let r = timedep_probabilities(&s, &ProfileSet::constant(), 0.0, 40.0 / total, &c).unwrap();
    assert!(r.residual < 1e-9);
    assert_eq!(r.status, HorizonStatus::Ok);
    assert_close(&r.probabilities, &s.static_probabilities().unwrap(), 1e-9);
    let short = timedep_probabilities(&s, &ProfileSet::constant(), 0.0, 1.0 / total, &c).unwrap();
    assert_eq!(short.status, HorizonStatus::HorizonTooShort);
    assert!((short.residual - (-1.0f64).exp()).abs() < 1e-12);
    assert!((short.probabilities.iter().sum::<f64>() + short.residual - 1.0).abs() < 1e-12);
}

/// Three states A, B, C: A–B always coupled, A–C switched on by a step at
/// `t_on`. The race is a pair of exponential clocks.
#[test]
fn delayed_step_race_matches_closed_form() {
    let c = consts();
    let (wa, wb, wc) = (0.5, 0.2, 0.3);
    let (eab, eac) = (E, 3.0 * E);
    let s = Superposition::new(
        vec![wa, wb, wc],
        vec![vec![0.0, eab, eac], vec![eab, 0.0, 0.0], vec![eac, 0.0, 0.0]],
    )
    .unwrap();
    let r1 = c.rate(eab * (wa + wb));
    let r2 = c.rate(eac * (wa + wc));
    for lifetimes in [0.0, 0.5, 2.0, 10.0] {
        let t_on = lifetimes / r1;
        let profiles = ProfileSet::constant().with_pair(0, 2, CouplingProfile::step(t_on));
        let horizon = t_on + 60.0 / (r1 + r2);
        let r = timedep_probabilities(&s, &profiles, 0.0, horizon, &c).unwrap();
        let late = (-r1 * t_on).exp();
        let p_ac = late * r2 / (r1 + r2);
        let p_c = p_ac * wc / (wa + wc);
        let p_b = ((1.0 - late) + late * r1 / (r1 + r2)) * wb / (wa + wb);
        assert!((r.probabilities[2] - p_c).abs() < 1e-9, "{lifetimes}");
        assert!((r.probabilities[1] - p_b).abs() < 1e-9, "{lifetimes}");
        assert!(r.residual < 1e-12);
    }
}

/// Linear ramp and table profiles checked against a midpoint march of the
/// survival probability.
#[test]
fn linear_ramp_matches_direct_integration() {
    let c = consts();
    let s = three_state();
    let tau = 1.0 / s.total_rate(&c);
    let ramp = CouplingProfile::Ramp { t_on: 0.3 * tau, t_rise: 2.0 * tau };
    let table = CouplingProfile::Table { points: vec![(0.0, 0.1), (tau, 0.9), (3.0 * tau, 0.4)] };
    let profiles = ProfileSet::constant().with_pair(0, 2, ramp.clone()).with_pair(1, 2, table.clone());
    let rates = s.trigger_rate_matrix(&c);
    let shape = |i: usize, j: usize, t: f64| match (i.min(j), i.max(j)) {
        (0, 2) => ramp.factor(t),
        (1, 2) => table.factor(t),
        _ => 1.0,
    };
    let horizon = 4.0 * tau;
    let steps = 200_000;
    let dt = horizon / steps as f64;
    let mut surv = 1.0;
    let mut p = [0.0; 3];
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        let into: Vec<f64> = (0..3).map(|j| (0..3).map(|i| rates[i][j] * shape(i, j, t)).sum()).collect();
        let total: f64 = into.iter().sum();
        let mid = surv * (-0.5 * total * dt).exp();
        for (pj, r) in p.iter_mut().zip(&into) {
            *pj += mid * r * dt;
        }
        surv *= (-total * dt).exp();
    }
    let r = timedep_probabilities_with(&s, &profiles, 0.0, horizon, 1.0, &c).unwrap();
    for j in 0..3 {
        assert!((r.probabilities[j] - p[j]).abs() < 1e-6, "{:?} vs {p:?}", r.probabilities);
    }
    assert!((r.residual - surv).abs() < 1e-6);
}

#[test]
fn cascade_uses_time_dependence() {
    // fig3b with the other detectors starting to record much later: the
    // race is decided before they couple, so p({0}) stays at 1/2.
    let c = consts();
    let n = 4;
    let s = fig3a(n);
    let rate = s.total_rate(&c);
    let delay = 200.0 / rate;
    let mut profiles = ProfileSet::uniform(CouplingProfile::step(delay));
    for j in 1..n {
        profiles = profiles.with_pair(
            0,
            j,
            CouplingProfile::Mix {
                parts: vec![(0.5, CouplingProfile::Constant), (0.5, CouplingProfile::step(delay))],
            },
        );
    }
    let d = cascade_distribution(&s, &profiles, &c).unwrap();
    assert!((d.get(&[0]) - 0.5).abs() < 1e-9);
    assert!((d.total() - 1.0).abs() < 1e-12);
}

#[test]
fn mean_potential_rates() {
    let c = consts();
    let cfg = QuadratureConfig::default();
    let a = MassDistribution::sphere(1.0, 1.0, Vec3::zeros());
    let b = MassDistribution::sphere(1.0, 1.0, Vec3::new(2.0, 0.0, 0.0));
    let e = pair_eg(&a, &b, &cfg, &c).unwrap();
    let s = Superposition::new(vec![0.5, 0.5], vec![vec![0.0, e], vec![e, 0.0]]).unwrap();
    let r = decay_rate_via_mean_potential(&s, &[a.clone(), b.clone()], &cfg, &c).unwrap();
    let direct = s.state_decay_rates(&c);
    for i in 0..2 {
        assert!((r.exact[i] - direct[i]).abs() < 1e-2 * direct[i]);
        assert!((r.approximate[i] - r.exact[i]).abs() < 1e-2 * r.exact[i]);
    }

    let same = Superposition::new(vec![0.5, 0.5], vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let r = decay_rate_via_mean_potential(&same, &[a.clone(), a.clone()], &cfg, &c).unwrap();
    assert_eq!(r.exact, vec![0.0, 0.0]);
    assert_eq!(r.approximate, vec![0.0, 0.0]);

    let wrong = Superposition::new(vec![0.5, 0.5], vec![vec![0.0, 3.0 * e], vec![3.0 * e, 0.0]]).unwrap();
    assert!(matches!(
        decay_rate_via_mean_potential(&wrong, &[a, b], &cfg, &c),
        Err(ReductionError::Consistency { .. })
    ));
}

fn weights_strategy(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 2..=max_n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        w
    })
}

fn coupled(weights: Vec<f64>, entries: &[f64]) -> Superposition {
    let n = weights.len();
    let mut k = 0;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            m[i][j] = entries[k % entries.len()];
            m[j][i] = m[i][j];
            k += 1;
        }
    }
    Superposition::new(weights, m).unwrap()
}

proptest! {
    #[test]
    fn equal_couplings_reproduce_weights(w in weights_strategy(8), e in 1e-40f64..1e-20) {
        let s = coupled(w.clone(), &[e]);
        let p = s.static_probabilities().unwrap();
        for (a, b) in p.iter().zip(&w) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_state_calibration(w in weights_strategy(2), e in 1e-40f64..1e-20) {
        let p = coupled(w.clone(), &[e]).static_probabilities().unwrap();
        prop_assert!((p[0] - w[0]).abs() < 1e-15 && (p[1] - w[1]).abs() < 1e-15);
    }

    #[test]
    fn scale_invariance(w in weights_strategy(6), entries in prop::collection::vec(0.1f64..3.0, 15), lambda in 1e-6f64..1e6) {
        let s = coupled(w, &entries);
        let p = s.static_probabilities().unwrap();
        let q = s.scaled(lambda).unwrap().static_probabilities().unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn row_column_duality(w in weights_strategy(6), entries in prop::collection::vec(0.0f64..3.0, 15)) {
        let c = consts();
        let s = coupled(w, &entries.iter().map(|x| x * E).collect::<Vec<_>>());
        let rows: f64 = s.state_decay_rates(&c).iter().sum();
        let cols: f64 = s.reduction_rates(&c).iter().sum();
        prop_assert!((rows - cols).abs() <= 1e-12 * rows.max(1e-300));
    }

    #[test]
    fn outcome_marginals(w in weights_strategy(6), entries in prop::collection::vec(prop_oneof![Just(0.0), 0.5f64..2.0], 15)) {
        let s = coupled(w, &entries);
        prop_assume!(!s.is_stable());
        let d = outcome_distribution(&s).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-10);
        // Mass arriving in outcomes that contain j as the trigger target.
        let p = s.static_probabilities().unwrap();
        for (j, pj) in p.iter().enumerate() {
            let target_mass: f64 = d.iter().filter(|(k, _)| **k == s.survivors(j)).map(|(_, v)| *v).sum();
            prop_assert!(target_mass + 1e-12 >= *pj);
        }
        let merged: f64 = (0..s.len()).filter(|&j| p[j] > 0.0).map(|j| p[j]).sum();
        prop_assert!((merged - 1.0).abs() < 1e-10);
    }

    #[test]
    fn proportional_profiles_match_static(
        w in weights_strategy(5),
        entries in prop::collection::vec(0.2f64..2.0, 10),
        t_on in 0.0f64..5.0,
        t_rise in 0.0f64..5.0,
    ) {
        let c = consts();
        let s = coupled(w, &entries.iter().map(|x| x * E).collect::<Vec<_>>());
        let total = s.total_rate(&c);
        let profile = CouplingProfile::Ramp { t_on: t_on / total, t_rise: t_rise / total };
        let profiles = ProfileSet::uniform(profile);
        let h = default_horizon(&s, &profiles, 0.0, &c).unwrap();
        let r = timedep_probabilities(&s, &profiles, 0.0, h, &c).unwrap();
        let p = s.static_probabilities().unwrap();
        for (a, b) in r.probabilities.iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn cascade_matches_exact_enumeration(
        n in 2usize..=4,
        raw_w in prop::collection::vec(1i64..6, 4),
        raw_e in prop::collection::vec(0i64..3, 6),
    ) {
        let wsum: i64 = raw_w[..n].iter().sum();
        let wq: Vec<Q> = raw_w[..n].iter().map(|&x| q(x, wsum)).collect();
        let mut eq = vec![vec![q(0, 1); n]; n];
        let mut ef = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in 0..i {
                eq[i][j] = q(raw_e[k], 1);
                eq[j][i] = q(raw_e[k], 1);
                ef[i][j] = raw_e[k] as f64 * E;
                ef[j][i] = ef[i][j];
                k += 1;
            }
        }
        let wf: Vec<f64> = raw_w[..n].iter().map(|&x| x as f64 / wsum as f64).collect();
        let s = Superposition::new(wf, ef).unwrap();
        prop_assume!(!s.is_stable());
        let got = cascade_distribution(&s, &ProfileSet::constant(), &consts()).unwrap();
        let want = exact_cascade(&eq, &wq);
        prop_assert_eq!(got.len(), want.len());
        for (key, v) in &want {
            prop_assert!((got.get(key) - to_f64(v)).abs() < 1e-12, "{:?}", key);
        }
    }
}
