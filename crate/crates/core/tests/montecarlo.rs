use reductionlab_core::montecarlo::*;
use reductionlab_core::reduction::{CouplingProfile, ProfileSet, Superposition};
use reductionlab_core::PhysicalConstants;

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

fn config(s: &Superposition, n: u64) -> TrialConfig {
    TrialConfig::for_superposition(7, n, s, &ProfileSet::constant(), &consts()).unwrap()
}

#[test]
fn pair_frequencies_follow_rates() {
    let c = consts();
    let s = three_state();
    let race = Race::new(&s, &ProfileSet::constant(), 1.0, &c).unwrap();
    let rates = s.trigger_rate_matrix(&c);
    let total: f64 = rates.iter().flatten().sum();
    let n = 100_000;
    let mut counts = [[0u64; 3]; 3];
    let mut stats = ThinningStats::default();
    for k in 0..n {
        let ev = race.sample(0.0, f64::INFINITY, &mut trial_rng(1, k), &mut stats).unwrap();
        counts[ev.i][ev.j] += 1;
    }
    for i in 0..3 {
        for j in 0..3 {
            let p = rates[i][j] / total;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let f = counts[i][j] as f64 / n as f64;
            assert!((f - p).abs() <= 4.0 * sigma.max(1e-12), "({i},{j}) {f} vs {p}");
        }
    }
    assert_eq!(stats.proposals, stats.accepted);
}

#[test]
fn waiting_times_are_exponential() {
    let c = consts();
    let s = three_state();
    let race = Race::new(&s, &ProfileSet::constant(), 1.0, &c).unwrap();
    let rate = s.total_rate(&c);
    let n = 20_000;
    let mut t: Vec<f64> = (0..n)
        .map(|k| {
            race.sample(0.0, f64::INFINITY, &mut trial_rng(2, k), &mut ThinningStats::default())
                .unwrap()
                .t
        })
        .collect();
    t.sort_by(f64::total_cmp);
    // Kolmogorov–Smirnov against Exp(rate); 1.63/√n is the 1% critical value.
    let d = t
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - k as f64 / n as f64).abs().max(((k + 1) as f64 / n as f64 - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn no_event_before_ramp() {
    let c = consts();
    let s = fig3a(4);
    let t_on = 5.0 / s.total_rate(&c);
    let profiles = ProfileSet::uniform(CouplingProfile::Ramp { t_on, t_rise: t_on });
    for k in 0..5_000 {
        let ev = sample_first_trigger(&s, &profiles, 0.0, f64::INFINITY, 2.0, &mut trial_rng(3, k), &c).unwrap();
        assert!(ev.t >= t_on);
    }
}

#[test]
fn thinning_acceptance_rate() {
    let c = consts();
    let s = fig3a(3);
    let rate = s.total_rate(&c);
    // Short window so that few trials stop early at an accepted event.
    let window = 0.02 / rate;
    let profiles = ProfileSet::uniform(CouplingProfile::Ramp { t_on: 0.0, t_rise: window });
    let factor = 50.0;
    let race = Race::new(&s, &profiles, factor, &c).unwrap();
    let mut stats = ThinningStats::default();
    for k in 0..2_000_000 {
        race.sample(0.0, window, &mut trial_rng(4, k), &mut stats);
    }
    let observed = stats.accepted as f64 / stats.proposals as f64;
    let expected = 0.5 / factor;
    assert!((observed / expected - 1.0).abs() < 0.02, "{observed} vs {expected}");
}

#[test]
fn cascade_trials_fixtures() {
    let c = consts();
    let a = fig3a(4);
    for k in 0..200 {
        assert_eq!(run_cascade_trial(&a, &ProfileSet::constant(), &config(&a, 1), k, &c).unwrap().surviving.len(), 1);
    }
    let b = fig3b(4);
    for k in 0..200 {
        let out = run_cascade_trial(&b, &ProfileSet::constant(), &config(&b, 1), k, &c).unwrap();
        assert!(out.surviving == [0] || out.surviving == [1, 2, 3], "{:?}", out.surviving);
    }
    let stable = Superposition::new(vec![0.5, 0.5], matrix(2, |_, _| 0.0)).unwrap();
    let cfg = TrialConfig {
        seed: 1,
        n_trials: 1,
        horizon: 1.0,
        thinning_bound_factor: 1.0,
    };
    let out = run_cascade_trial(&stable, &ProfileSet::constant(), &cfg, 0, &c).unwrap();
    assert_eq!(out.surviving, vec![0, 1]);
    assert_eq!(out.events, 0);
}

#[test]
fn trials_are_deterministic_per_index() {
    let c = consts();
    let s = three_state();
    let cfg = config(&s, 1);
    let a = run_cascade_trial(&s, &ProfileSet::constant(), &cfg, 42, &c).unwrap();
    let b = run_cascade_trial(&s, &ProfileSet::constant(), &cfg, 42, &c).unwrap();
    assert_eq!(a, b);
}

fn within(est: &McEstimate, outcome: &[usize], p: f64, k: f64) {
    let o = est.get(outcome).unwrap();
    let sigma = (p * (1.0 - p) / est.n_trials as f64).sqrt();
    assert!((o.probability - p).abs() < k * sigma, "{outcome:?}: {} vs {p}", o.probability);
}

#[test]
fn fig3b_fifty_percent() {
    let s = fig3b(4);
    let est = estimate(&s, &ProfileSet::constant(), &config(&s, 100_000), &consts()).unwrap();
    within(&est, &[0], 0.5, 3.0);
    assert_eq!(est.outcomes.len(), 2);
    assert_eq!(est.n_no_event, 0);
    let o = est.get(&[0]).unwrap();
    assert!((o.standard_error - 1.58e-3).abs() < 2e-5);
}

#[test]
fn projection_postulate_case() {
    let w = [0.4, 0.3, 0.2, 0.1];
    let s = Superposition::new(w.to_vec(), matrix(4, |_, _| E)).unwrap();
    let est = estimate(&s, &ProfileSet::constant(), &config(&s, 100_000), &consts()).unwrap();
    for (k, p) in w.iter().enumerate() {
        within(&est, &[k], *p, 3.0);
    }
}

#[test]
fn three_state_fixture() {
    let s = three_state();
    let est = estimate(&s, &ProfileSet::constant(), &config(&s, 100_000), &consts()).unwrap();
    for (k, p) in [0.3, 0.3, 0.4].iter().enumerate() {
        within(&est, &[k], *p, 3.0);
    }
    let total: f64 = est.outcomes.iter().map(|o| o.probability).sum::<f64>() + est.n_no_event as f64 / est.n_trials as f64;
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn reproducible_across_thread_counts() {
    let s = three_state();
    let cfg = config(&s, 20_000);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&s, &ProfileSet::constant(), &cfg, &consts()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn horizon_cuts_trials() {
    let s = fig3a(4);
    let cfg = TrialConfig {
        seed: 3,
        n_trials: 10_000,
        horizon: 1.0 / s.total_rate(&consts()),
        thinning_bound_factor: 1.0,
    };
    let est = estimate(&s, &ProfileSet::constant(), &cfg, &consts()).unwrap();
    let frac = est.n_no_event as f64 / 10_000.0;
    assert!((frac - (-1.0f64).exp()).abs() < 0.02);
}

#[test]
fn invalid_configs() {
    let s = fig3a(2);
    let mut cfg = config(&s, 10);
    cfg.n_trials = 0;
    assert!(estimate(&s, &ProfileSet::constant(), &cfg, &consts()).is_err());
    let mut cfg = config(&s, 10);
    cfg.thinning_bound_factor = 0.5;
    assert!(estimate(&s, &ProfileSet::constant(), &cfg, &consts()).is_err());
}
