//! Acceptance suite: one line per criterion with its runtime. Exits with
//! status 1 if any criterion fails.

#[path = "../../core/tests/support/exact_cascade.rs"]
mod exact_cascade;

use std::process::Command;
use std::time::{Duration, Instant};

use exact_cascade::{exact_cascade, q, to_f64, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reductionlab_core::massdist::{energy_fuzziness_pair, pair_eg, sphere_pair_eg};
use reductionlab_core::montecarlo::{estimate, TrialConfig};
use reductionlab_core::reduction::{
    cascade_distribution, default_horizon, timedep_probabilities, CouplingProfile, ProfileSet, Superposition,
};
use reductionlab_core::scenarios::{
    build_biology_star, build_fig3b, build_two_detector_overlap, mutant_center_asymptotic,
    original_center_asymptotic, star_center_probability, StarCenter,
};
use reductionlab_core::solidstate::{
    detector_budget, fluid_sphere_lifetime, macroscopic_crossover, nucleus_extension, solid_plateau_eg,
    DetectorEffect, MacroGeometry,
};
use reductionlab_core::{DetectorParams, Material, MassDistribution, PhysicalConstants, QuadratureConfig, Vec3};

type Outcome = Result<String, String>;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

/// Coupling of order 10⁻³⁴ J, so that rates are of order one per second.
const E: f64 = 1e-34;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn uniform(n: usize, e: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { e }).collect())
        .collect()
}

fn c1_projection_postulate() -> Outcome {
    let c = consts();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let w = random_weights(&mut rng, n);
        let e = E * rng.random_range(0.1..10.0);
        let s = Superposition::new(w.clone(), uniform(n, e)).map_err(|e| e.to_string())?;
        let p = s.static_probabilities().map_err(|e| e.to_string())?;
        let d = cascade_distribution(&s, &ProfileSet::constant(), &c).map_err(|e| e.to_string())?;
        for k in 0..n {
            worst = worst.max((p[k] - w[k]).abs()).max((d.get(&[k]) - w[k]).abs());
        }
    }
    check(worst < 1e-12, format!("max |p_i - |c_i|^2| = {worst:.2e} (static and cascade)"))
}

fn c2_fifty_percent() -> Outcome {
    let c = consts();
    let mut parts = Vec::new();
    for n in [4, 8, 16, 32] {
        let sc = build_fig3b(n, E, CouplingProfile::Constant).map_err(|e| e.to_string())?;
        let p = cascade_distribution(&sc.superposition, &sc.profiles, &c)
            .map_err(|e| e.to_string())?
            .get(&[0]);
        if p != 0.5 {
            return Err(format!("n = {n}: p({{1}}) = {p:?}"));
        }
        parts.push(format!("n={n}: 0.5"));
    }
    let sc = build_fig3b(4, E, CouplingProfile::Constant).map_err(|e| e.to_string())?;
    let p = sc.superposition.static_probabilities().map_err(|e| e.to_string())?;
    let want = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    let dev = p.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(dev < 1e-12, format!("{}; static n=4 deviation {dev:.1e}", parts.join(", ")))
}

fn c3_monte_carlo() -> Outcome {
    let c = consts();
    let trials = 100_000;
    let sc = build_fig3b(4, E, CouplingProfile::Constant).map_err(|e| e.to_string())?;
    let cfg = TrialConfig::for_superposition(2024, trials, &sc.superposition, &sc.profiles, &c).map_err(|e| e.to_string())?;
    let est = estimate(&sc.superposition, &sc.profiles, &cfg, &c).map_err(|e| e.to_string())?;
    let sigma = (0.25 / trials as f64).sqrt();
    let p = est.probability(&[0]);
    let mut ok = (p - 0.5).abs() < 3.0 * sigma;
    let mut detail = format!("fig3b p({{1}}) = {p} ({:+.2} sigma)", (p - 0.5) / sigma);

    let w = [0.3, 0.3, 0.4];
    let s = Superposition::new(w.to_vec(), uniform(3, E)).map_err(|e| e.to_string())?;
    let profiles = ProfileSet::constant();
    let cfg = TrialConfig::for_superposition(2025, trials, &s, &profiles, &c).map_err(|e| e.to_string())?;
    let est = estimate(&s, &profiles, &cfg, &c).map_err(|e| e.to_string())?;
    for (k, &wk) in w.iter().enumerate() {
        let sigma = (wk * (1.0 - wk) / trials as f64).sqrt();
        let p = est.probability(&[k]);
        ok &= (p - wk).abs() < 3.0 * sigma;
        detail.push_str(&format!("; p({{{}}}) = {p} ({:+.2} sigma)", k + 1, (p - wk) / sigma));
    }
    check(ok, detail)
}

fn sphere(m: f64, d: f64, x: f64) -> MassDistribution {
    MassDistribution::sphere(m, d, Vec3::new(x, 0.0, 0.0))
}

fn c4_appendix_identity() -> Outcome {
    let c = consts();
    let tol = 1e-3;
    let cfg = QuadratureConfig::default().with_tolerance(tol);
    let mut worst = 0.0f64;
    for ratio in [1.0, 2.0, 10.0] {
        let (a, b) = (sphere(2.0, 1.0, 0.0), sphere(2.0, 1.0, ratio));
        let eg = pair_eg(&a, &b, &cfg, &c).map_err(|e| e.to_string())?;
        let (e1, e2) = energy_fuzziness_pair(&a, &b, &cfg, &c).map_err(|e| e.to_string())?;
        worst = worst.max(((e1 + e2) - eg).abs() / eg);
    }
    check(worst < 2.0 * tol, format!("max relative |dE1 + dE2 - E_G| = {worst:.2e} (limit {:.0e})", 2.0 * tol))
}

fn c5_quadrature_vs_analytic() -> Outcome {
    let c = consts();
    let cfg = QuadratureConfig::default().with_tolerance(1e-4);
    let mut worst = 0.0f64;
    for ratio in [1.0, 1.5, 2.0, 5.0, 10.0, 100.0] {
        let got = pair_eg(&sphere(2.0, 1.0, 0.0), &sphere(2.0, 1.0, ratio), &cfg, &c).map_err(|e| e.to_string())?;
        let want = sphere_pair_eg(2.0, 1.0, ratio, &c).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs() / want);
    }
    check(worst < 1e-3, format!("max relative error {worst:.2e} over D/d in [1, 100]"))
}

fn within_factor(x: f64, target: f64, factor: f64) -> bool {
    x >= target / factor && x <= target * factor
}

fn c6_solid_state() -> Outcome {
    let c = consts();
    let iron = Material::iron();
    let rate = c.rate(solid_plateau_eg(0.1, &iron, 300.0, &c));
    let d = nucleus_extension(&iron, 300.0, &c);
    let crossover = macroscopic_crossover(0.1, &iron, 300.0, &MacroGeometry::rod(0.01), &c);
    let ok = (10f64.powf(8.5)..=10f64.powf(9.5)).contains(&rate)
        && within_factor(d, 0.2e-10, 2.0)
        && within_factor(crossover, 20e-10, 2.0);
    check(
        ok,
        format!("plateau rate {rate:.3e} 1/s, d_nucl {d:.3e} m, crossover {crossover:.3e} m"),
    )
}

fn c7_fluid_lifetime() -> Outcome {
    let tau = fluid_sphere_lifetime(1e-6, 1000.0, &consts());
    check((0.1..=10.0).contains(&tau), format!("1 um water sphere: tau = {tau:.3} s"))
}

fn c8_biology() -> Outcome {
    let c = consts();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    // The finite-n formula is first checked against the full cascade.
    for c1sq in [0.1, 0.5, 0.9] {
        for center in [StarCenter::Original, StarCenter::Mutant] {
            let sc = build_biology_star(100, c1sq, center, E).map_err(|e| e.to_string())?;
            let k = usize::from(center == StarCenter::Mutant);
            let exact = cascade_distribution(&sc.superposition, &sc.profiles, &c)
                .map_err(|e| e.to_string())?
                .get(&[k]);
            let formula = star_center_probability(100, sc.superposition.weights()[k]);
            if (exact - formula).abs() > 1e-12 {
                return Err(format!("cascade {exact} vs star formula {formula}"));
            }
        }
    }
    let mut ratios = Vec::new();
    for n in [100usize, 1000, 10_000] {
        for c1sq in [0.1, 0.5, 0.9] {
            let w_mutant = (1.0 - c1sq) / n as f64;
            let original = star_center_probability(n, c1sq);
            let mutant = star_center_probability(n, w_mutant);
            let e1 = (original - original_center_asymptotic(n, c1sq)).abs() / original;
            let e2 = (mutant - mutant_center_asymptotic(c1sq)).abs() / mutant;
            worst = worst.max(e1 * n as f64).max(e2 * n as f64);
            if c1sq == 0.5 {
                ratios.push(mutant / w_mutant);
            }
        }
    }
    let growth = [ratios[1] / ratios[0], ratios[2] / ratios[1]];
    let linear = growth.iter().all(|g| (g - 10.0).abs() < 0.5);
    detail.push(format!("max n * relative error = {worst:.3} (limit 5)"));
    detail.push(format!(
        "mutant enhancement over projection x{:.1}, x{:.1}, x{:.1} at n = 1e2, 1e3, 1e4",
        ratios[0], ratios[1], ratios[2]
    ));
    check(worst < 5.0 && linear, detail.join("; "))
}

fn c9_detector_budget() -> Outcome {
    let c = consts();
    let budget = detector_budget(&DetectorParams::default(), &c).map_err(|e| e.to_string())?;
    let rate = |effect: DetectorEffect| budget.iter().find(|b| b.effect == effect).map(|b| b.rate).unwrap_or(f64::NAN);
    let impetus = rate(DetectorEffect::PhotonImpetus);
    let electron = rate(DetectorEffect::ElectronTransfer);
    let compression = rate(DetectorEffect::DielectricCompression);
    let resistor = rate(DetectorEffect::ResistorHeating);
    let ordered = impetus < electron && electron < compression && compression < resistor;
    let near = within_factor(resistor, 1e5, 100.0) && within_factor(compression, 1e-1, 100.0);
    check(
        ordered && near,
        format!(
            "impetus {impetus:.1e} < electron {electron:.1e} < compression {compression:.1e} < resistor {resistor:.1e} 1/s"
        ),
    )
}

/// First-trigger probability into C for A–B constant and A–C switched on
/// by a linear ramp from `t_on` over `t_rise`, integrated by hand.
fn ramp_race_closed_form(r1: f64, r2: f64, t_on: f64, t_rise: f64) -> f64 {
    // On the ramp the A–C hazard is r2·s/T, s = t − t_on.
    let a = r2 / (2.0 * t_rise);
    let shift = r1 / (2.0 * a);
    let gauss = (r1 * r1 / (4.0 * a)).exp() * (std::f64::consts::PI / a).sqrt() / 2.0
        * (libm::erfc(a.sqrt() * shift) - libm::erfc(a.sqrt() * (t_rise + shift)));
    let on_ramp = (1.0 - (-r1 * t_rise - a * t_rise * t_rise).exp()) - r1 * gauss;
    let after = (-r1 * (t_on + t_rise) - r2 * t_rise / 2.0).exp() * r2 / (r1 + r2);
    (-r1 * t_on).exp() * on_ramp + after
}

fn c10_time_dependence() -> Outcome {
    let c = consts();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = rng.random_range(2..=6);
        let w = random_weights(&mut rng, n);
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                let e = if rng.random_bool(0.2) { 0.0 } else { E * rng.random_range(0.1..3.0) };
                m[i][j] = e;
                m[j][i] = e;
            }
        }
        m[0][1] = E;
        m[1][0] = E;
        let s = Superposition::new(w, m).map_err(|e| e.to_string())?;
        let tau = 1.0 / s.total_rate(&c);
        let shape = match k % 3 {
            0 => CouplingProfile::Ramp {
                t_on: rng.random_range(0.0..2.0) * tau,
                t_rise: rng.random_range(0.0..3.0) * tau,
            },
            1 => CouplingProfile::Table {
                points: vec![(0.0, 0.2), (tau, 1.0), (2.5 * tau, 0.6)],
            },
            _ => CouplingProfile::step(rng.random_range(0.0..5.0) * tau),
        };
        let profiles = ProfileSet::uniform(shape);
        let horizon = default_horizon(&s, &profiles, 0.0, &c).map_err(|e| e.to_string())?;
        let r = timedep_probabilities(&s, &profiles, 0.0, horizon, &c).map_err(|e| e.to_string())?;
        let p = s.static_probabilities().map_err(|e| e.to_string())?;
        for (a, b) in r.probabilities.iter().zip(&p) {
            worst = worst.max((a - b).abs());
        }
    }

    let (wa, wb, wc) = (0.5, 0.2, 0.3);
    let (eab, eac) = (E, 3.0 * E);
    let s = Superposition::new(
        vec![wa, wb, wc],
        vec![vec![0.0, eab, eac], vec![eab, 0.0, 0.0], vec![eac, 0.0, 0.0]],
    )
    .map_err(|e| e.to_string())?;
    let r1 = c.rate(eab * (wa + wb));
    let r2 = c.rate(eac * (wa + wc));
    let mut ramp_worst = 0.0f64;
    for (t_on, t_rise) in [(0.0, 0.5), (0.4, 2.0), (1.5, 0.1), (3.0, 4.0)] {
        let profiles = ProfileSet::constant().with_pair(0, 2, CouplingProfile::Ramp { t_on, t_rise });
        let horizon = t_on + t_rise + 60.0 / (r1 + r2);
        let r = timedep_probabilities(&s, &profiles, 0.0, horizon, &c).map_err(|e| e.to_string())?;
        let p_ac = ramp_race_closed_form(r1, r2, t_on, t_rise);
        ramp_worst = ramp_worst.max((r.probabilities[2] - p_ac * wc / (wa + wc)).abs());
        ramp_worst = ramp_worst.max((r.probabilities[1] - (1.0 - p_ac) * wb / (wa + wb)).abs());
    }
    check(
        worst < 1e-6 && ramp_worst < 1e-6,
        format!("proportional profiles max deviation {worst:.1e}; delayed ramp race {ramp_worst:.1e}"),
    )
}

fn c11_exact_cascade() -> Outcome {
    let c = consts();
    let weight_sets: [&[i64]; 4] = [&[1, 1, 1, 1], &[1, 2, 3, 4], &[5, 1, 1, 3], &[2, 7, 1, 1]];
    let mut fixtures = 0;
    let mut worst = 0.0f64;
    for n in 2..=4usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
        for code in 0..3usize.pow(pairs.len() as u32) {
            let mut eq = vec![vec![q(0, 1); n]; n];
            let mut ef = vec![vec![0.0; n]; n];
            let mut rest = code;
            for &(i, j) in &pairs {
                let v = (rest % 3) as i64;
                rest /= 3;
                eq[i][j] = q(v, 1);
                eq[j][i] = q(v, 1);
                ef[i][j] = v as f64 * E;
                ef[j][i] = v as f64 * E;
            }
            if ef.iter().flatten().all(|&x| x == 0.0) {
                continue;
            }
            for raw in weight_sets {
                let total: i64 = raw[..n].iter().sum();
                let wq: Vec<Q> = raw[..n].iter().map(|&x| q(x, total)).collect();
                let wf: Vec<f64> = raw[..n].iter().map(|&x| x as f64 / total as f64).collect();
                let s = Superposition::new(wf, ef.clone()).map_err(|e| e.to_string())?;
                let got = cascade_distribution(&s, &ProfileSet::constant(), &c).map_err(|e| e.to_string())?;
                let want = exact_cascade(&eq, &wq);
                if got.len() != want.len() {
                    return Err(format!("n = {n}, couplings {ef:?}: outcome sets differ"));
                }
                for (key, v) in &want {
                    worst = worst.max((got.get(key) - to_f64(v)).abs());
                }
                fixtures += 1;
            }
        }
    }
    check(worst < 1e-12, format!("{fixtures} fixtures, max |float - exact| = {worst:.1e}"))
}

fn c12_overlapping_detectors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ratio_worst = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for _ in 0..200 {
        let c1 = rng.random_range(0.01..0.6);
        let c2 = rng.random_range(0.01..(0.99 - c1));
        let sc = build_two_detector_overlap(c1, c2, E).map_err(|e| e.to_string())?;
        let p = sc.superposition.static_probabilities().map_err(|e| e.to_string())?;
        ratio_worst = ratio_worst.max(((p[0] / p[1]) / (c1 / c2) - 1.0).abs());
        min_gap = min_gap.min(((p[0] + p[1]) - (c1 + c2)).abs());
    }
    let sc = build_two_detector_overlap(0.3, 0.7, E).map_err(|e| e.to_string())?;
    let p = sc.superposition.static_probabilities().map_err(|e| e.to_string())?;
    let no_third = ((p[0] + p[1]) - 1.0).abs();
    check(
        ratio_worst < 1e-12 && min_gap > 1e-6 && no_third < 1e-15,
        format!(
            "ratio deviation {ratio_worst:.1e}; smallest |p1+p2 - c1-c2| with third weight {min_gap:.2e}; without {no_third:.0e}"
        ),
    )
}

fn run_binary(threads: usize, out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_reductionlab"))
        .args(["run", "--builder", "fig3a", "--param", "n_detectors=4", "--param", "e_plateau=1e-34"])
        .args(["--method", "mc", "--trials", "20000", "--seed", "99", "--out"])
        .arg(out)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .env_remove("REDUCTIONLAB_CONSTANTS")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_binary(4, &dir.path().join("a.csv"))?;
    let mut same = true;
    for (k, threads) in [4, 1, 2, 7].into_iter().enumerate() {
        same &= run_binary(threads, &dir.path().join(format!("b{k}.csv")))? == first;
    }
    let rows = first.iter().filter(|&&b| b == b'\n').count() - 1;
    check(same, format!("{rows} rows, identical over 2 runs and 1, 2, 4, 7 threads"))
}

fn main() {
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 13] = [
        ("projection-postulate recovery", Some(Duration::from_secs(1)), c1_projection_postulate),
        ("fifty-percent rule", Some(Duration::from_secs(1)), c2_fifty_percent),
        ("Monte Carlo oracle", Some(Duration::from_secs(10)), c3_monte_carlo),
        ("energy-uncertainty identity", Some(Duration::from_secs(30)), c4_appendix_identity),
        ("quadrature vs analytic spheres", Some(Duration::from_secs(30)), c5_quadrature_vs_analytic),
        ("solid-state numbers", Some(Duration::from_secs(1)), c6_solid_state),
        ("fluid lifetime", Some(Duration::from_secs(1)), c7_fluid_lifetime),
        ("biology star closed forms", Some(Duration::from_secs(1)), c8_biology),
        ("detector budget", Some(Duration::from_secs(1)), c9_detector_budget),
        ("time-dependent consistency", Some(Duration::from_secs(10)), c10_time_dependence),
        ("exact cascade enumeration", Some(Duration::from_secs(10)), c11_exact_cascade),
        ("overlapping detectors", Some(Duration::from_secs(1)), c12_overlapping_detectors),
        ("determinism", None, c13_determinism),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let slow = limit.is_some_and(|l| elapsed > l);
        let (mark, detail) = match (&outcome, slow) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; too slow")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if mark == "FAIL" {
            failed += 1;
        }
        let limit = limit.map_or("-".to_string(), |l| format!("{}s", l.as_secs()));
        println!(
            "{mark} {:>2} {name:<32} {:>8.3}s (limit {limit:>3})  {detail}",
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
