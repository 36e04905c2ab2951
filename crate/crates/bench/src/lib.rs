//! Shared fixtures for the criterion benchmarks.

use reductionlab_core::reduction::Superposition;
use reductionlab_core::{MassDistribution, Vec3};

/// Coupling of order 10⁻³⁴ J, giving rates of order one per second.
pub const E: f64 = 1e-34;

pub fn sphere_pair(separation: f64) -> (MassDistribution, MassDistribution) {
    (
        MassDistribution::sphere(1.0, 1.0, Vec3::zeros()),
        MassDistribution::sphere(1.0, 1.0, Vec3::new(separation, 0.0, 0.0)),
    )
}

/// A tilted rod and its copy shifted sideways by `shift`.
pub fn rod_pair(shift: f64) -> (MassDistribution, MassDistribution) {
    let rod = MassDistribution::rod(1.0, 0.8, 0.2, Vec3::new(1.0, 1.0, 0.0).normalize(), Vec3::zeros());
    (rod.clone(), rod.displaced(Vec3::new(0.0, 0.0, shift)))
}

/// Cubic lattice of `side³` nuclei and its copy shifted by half a spacing.
pub fn lattice_pair(side: usize) -> (MassDistribution, MassDistribution) {
    let spacing = 2.87e-10;
    let mut positions = Vec::new();
    for i in 0..side {
        for j in 0..side {
            for k in 0..side {
                positions.push(Vec3::new(i as f64, j as f64, k as f64) * spacing);
            }
        }
    }
    let lattice = MassDistribution::lattice(9.3e-26, 1.7e-11, positions);
    (lattice.clone(), lattice.displaced(Vec3::new(0.5 * spacing, 0.0, 0.0)))
}

/// `n` states with deterministic, unequal weights and couplings, a few of
/// them zero.
pub fn irregular(n: usize) -> Superposition {
    let raw: Vec<f64> = (0..n).map(|k| 1.0 + (k * 7 % 5) as f64).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|x| x / total).collect();
    let couplings = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = (i + j) * 3 + i.min(j);
                    if i == j || k % 7 == 0 {
                        0.0
                    } else {
                        E * (1 + k % 4) as f64
                    }
                })
                .collect()
        })
        .collect();
    Superposition::new(weights, couplings).expect("fixture is valid")
}
