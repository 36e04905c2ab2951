//! Coupling energy, energy uncertainties and potentials.

use rayon::prelude::*;

use super::kernel::{self, classify, pair_integral, primitive_potential, Level, PairClass};
use super::primitive::{flatten, merge, signed_difference, Primitive, Shape};
use super::{check_finite_vec, check_mass, check_positive, MassDistError, MassDistribution, QuadratureConfig, Vec3};
use crate::constants::PhysicalConstants;

/// Result of [`pair_eg_detailed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEstimate {
    /// Coupling energy in joules.
    pub energy: f64,
    /// Estimate at the previous refinement level (equal to `energy` when
    /// every contribution has a closed form).
    pub previous: f64,
    pub refinements: usize,
    /// Total masses of both states when they differ by more than one part
    /// in 10⁹.
    pub mass_mismatch: Option<(f64, f64)>,
}

fn validate_inputs(
    dists: &[&MassDistribution],
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<(), MassDistError> {
    for d in dists {
        d.validate()?;
    }
    cfg.validate()?;
    consts.validate()?;
    Ok(())
}

/// Runs `eval` on successive refinement levels until every component
/// changes by less than `rel_tolerance` of the largest one. `eval` returns
/// the estimates plus an absolute scale used as a rounding floor.
fn refine<F>(cfg: &QuadratureConfig, eval: F) -> Result<(Vec<f64>, Vec<f64>, usize), MassDistError>
where
    F: Fn(Level) -> (Vec<f64>, f64),
{
    let (mut previous, _) = eval(Level::new(cfg.grid_resolution, 0));
    for k in 1..=cfg.max_refinements {
        let (current, scale) = eval(Level::new(cfg.grid_resolution, k));
        let magnitude = current.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = current
            .iter()
            .zip(&previous)
            .map(|(c, p)| (c - p).abs())
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
        if worst.1 <= cfg.rel_tolerance * magnitude + 1e-13 * scale {
            return Ok((current, previous, k));
        }
        if k == cfg.max_refinements {
            return Err(MassDistError::Convergence {
                last: current[worst.0],
                previous: previous[worst.0],
                refinements: k,
            });
        }
        previous = current;
    }
    // max_refinements == 0: a single level is all that was asked for.
    Ok((previous.clone(), previous, 0))
}

/// Coupling energy `ξG ∫∫ Δρ(x) Δρ(y) / |x − y|` with `Δρ = ρ₁ − ρ₂`, in
/// joules.
pub fn pair_eg(
    d1: &MassDistribution,
    d2: &MassDistribution,
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<f64, MassDistError> {
    pair_eg_detailed(d1, d2, cfg, consts).map(|e| e.energy)
}

pub fn pair_eg_detailed(
    d1: &MassDistribution,
    d2: &MassDistribution,
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<CouplingEstimate, MassDistError> {
    validate_inputs(&[d1, d2], cfg, consts)?;
    let (m1, m2) = (d1.total_mass(), d2.total_mass());
    let mass_mismatch = ((m1 - m2).abs() > 1e-9 * m1.max(m2)).then_some((m1, m2));
    let prims = signed_difference(d1, d2);
    let scale = consts.xi * consts.g;

    // Closed-form contributions are summed once; only the rest is refined.
    let rows: Vec<(f64, f64, Vec<(usize, PairClass)>)> = (0..prims.len())
        .into_par_iter()
        .map(|a| {
            let pa = &prims[a];
            let mut exact = 0.0;
            let mut exact_abs = 0.0;
            let mut numeric = Vec::new();
            for (b, pb) in prims.iter().enumerate().skip(a) {
                let class = classify(pa, pb);
                if class == PairClass::Exact {
                    let mult = if a == b { 1.0 } else { 2.0 };
                    let term = mult * pa.density * pb.density * pair_integral(pa, pb, class, Level::new(2, 0), cfg.singularity_scheme);
                    exact += term;
                    exact_abs += term.abs();
                } else {
                    numeric.push((b, class));
                }
            }
            (exact, exact_abs, numeric)
        })
        .collect();
    let exact: f64 = rows.iter().map(|r| r.0).sum();
    let exact_abs: f64 = rows.iter().map(|r| r.1).sum();
    let numeric = pair_congruent_shifts(
        &prims,
        rows.iter()
            .enumerate()
            .flat_map(|(a, r)| r.2.iter().map(move |&(b, c)| (a, b, c)))
            .collect(),
    );

    let finish = |energy: f64, previous: f64, refinements: usize| CouplingEstimate {
        energy: energy.max(0.0),
        previous: previous.max(0.0),
        refinements,
        mass_mismatch,
    };
    if numeric.is_empty() {
        let e = scale * exact;
        return Ok(finish(e, e, 0));
    }
    let (last, previous, refinements) = refine(cfg, |level| {
        let terms: Vec<f64> = numeric
            .par_iter()
            .map(|&(a, b, class)| {
                let (pa, pb) = (&prims[a], &prims[b]);
                match class {
                    PairClass::Congruent => {
                        let s = pb.center - pa.center;
                        let difference = match pa.shape {
                            Shape::Sphere { radius } => kernel::ball_shift_difference(radius, &s, level),
                            _ => kernel::shift_difference(&pa.shape, &s, level),
                        };
                        (pa.density + pb.density).powi(2) * kernel::self_integral(&pa.shape, level)
                            - pa.density * pb.density * difference
                    }
                    _ => {
                        let mult = if a == b { 1.0 } else { 2.0 };
                        mult * pa.density * pb.density * pair_integral(pa, pb, class, level, cfg.singularity_scheme)
                    }
                }
            })
            .collect();
        let total = exact + terms.iter().sum::<f64>();
        let abs = exact_abs + terms.iter().map(|t| t.abs()).sum::<f64>();
        (vec![scale * total], scale * abs)
    })?;
    Ok(finish(last[0], previous[0], refinements))
}

/// Matches each near pair of identical shapes (closest partner first) and
/// folds both self-terms into the pair, so that small rigid displacements
/// are not computed as the difference of two large numbers.
fn pair_congruent_shifts(prims: &[Primitive], numeric: Vec<(usize, usize, PairClass)>) -> Vec<(usize, usize, PairClass)> {
    let mut candidates: Vec<(f64, usize, usize)> = numeric
        .iter()
        .filter(|&&(a, b, class)| class == PairClass::Near && prims[a].shape == prims[b].shape)
        .map(|&(a, b, _)| ((prims[b].center - prims[a].center).norm(), a, b))
        .collect();
    if candidates.is_empty() {
        return numeric;
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut matched = vec![false; prims.len()];
    let mut pairs = Vec::new();
    for (_, a, b) in candidates {
        if !matched[a] && !matched[b] {
            matched[a] = true;
            matched[b] = true;
            pairs.push((a, b));
        }
    }
    numeric
        .into_iter()
        .filter_map(|(a, b, class)| match class {
            PairClass::SelfTerm if matched[a] => None,
            PairClass::Near if pairs.contains(&(a, b)) => Some((a, b, PairClass::Congruent)),
            _ => Some((a, b, class)),
        })
        .collect()
}

/// Coupling energy of a uniform sphere and its copy displaced by
/// `separation`.
///
/// For `separation ≥ d` both self-terms and the cross term are elementary;
/// for partial overlap the full quadrature is used.
pub fn sphere_pair_eg(m: f64, d: f64, separation: f64, consts: &PhysicalConstants) -> Result<f64, MassDistError> {
    check_mass("m", m)?;
    check_positive("d", d)?;
    check_mass("separation", separation)?;
    consts.validate()?;
    if separation == 0.0 || m == 0.0 {
        return Ok(0.0);
    }
    if separation >= d {
        let self_terms = 2.0 * (12.0 / 5.0) * m * m / d;
        let cross = 2.0 * m * m / separation;
        return Ok(consts.xi * consts.g * (self_terms - cross));
    }
    let a = MassDistribution::sphere(m, d, Vec3::zeros());
    let b = MassDistribution::sphere(m, d, Vec3::new(separation, 0.0, 0.0));
    pair_eg(&a, &b, &QuadratureConfig::default().with_tolerance(1e-6), consts)
}

/// `Σ_a ρ_a Σ_b ρ_b ∫_a V_b` over two primitive lists: the mutual
/// interaction integral evaluated through the potential of `source`.
/// Returns the sum and the sum of absolute values.
fn field_overlap(field: &[Primitive], source: &[Primitive], level: Level, cfg: &QuadratureConfig) -> (f64, f64) {
    let rows: Vec<(f64, f64)> = field
        .par_iter()
        .map(|a| {
            let nodes = a.shape.volume_nodes(level.volume);
            let mut total = 0.0;
            let mut abs = 0.0;
            for b in source {
                let integral = match (a.cell, b.cell) {
                    (Some(ca), Some(cb)) if ca.origin == cb.origin && a.shape == b.shape => {
                        let Shape::Cube { half } = a.shape else {
                            unreachable!()
                        };
                        let offset = [
                            cb.ijk[0] - ca.ijk[0],
                            cb.ijk[1] - ca.ijk[1],
                            cb.ijk[2] - ca.ijk[2],
                        ];
                        kernel::lattice_kernel(offset, cfg.singularity_scheme) * (2.0 * half).powi(5)
                    }
                    _ => {
                        let d = a.center - b.center;
                        let in_lattice = b.cell.is_some();
                        nodes
                            .iter()
                            .map(|n| {
                                n.w * primitive_potential(&b.shape, &(n.p + d), level, cfg.singularity_scheme, in_lattice)
                            })
                            .sum()
                    }
                };
                let term = a.density * b.density * integral;
                total += term;
                abs += term.abs();
            }
            (total, abs)
        })
        .collect();
    (rows.iter().map(|r| r.0).sum(), rows.iter().map(|r| r.1).sum())
}

/// Energy uncertainties of both states: `(ξ∫ρ₁(φ₂ − φ₁), ξ∫ρ₂(φ₁ − φ₂))`.
///
/// Each state's density is integrated against the closed-form potentials
/// of the density difference, independently of the route taken by
/// [`pair_eg`]. The two values sum to the coupling energy.
pub fn energy_fuzziness_pair(
    d1: &MassDistribution,
    d2: &MassDistribution,
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<(f64, f64), MassDistError> {
    validate_inputs(&[d1, d2], cfg, consts)?;
    let diff = signed_difference(d1, d2);
    if diff.is_empty() {
        return Ok((0.0, 0.0));
    }
    let p1 = merge(flatten(d1, 1.0));
    let p2 = merge(flatten(d2, 1.0));
    let scale = consts.xi * consts.g;
    // φ₂ − φ₁ = G V[ρ₁ − ρ₂]
    let (values, _, _) = refine(cfg, |level| {
        let (e1, abs1) = field_overlap(&p1, &diff, level, cfg);
        let (e2, abs2) = field_overlap(&p2, &diff, level, cfg);
        (vec![scale * e1, -scale * e2], scale * (abs1 + abs2))
    })?;
    Ok((values[0], values[1]))
}

/// Mutual potential energy `∫ρ_field φ_source` in joules (no ξ). With
/// `field == source` this is twice the gravitational self-energy.
pub fn potential_energy(
    field: &MassDistribution,
    source: &MassDistribution,
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<f64, MassDistError> {
    validate_inputs(&[field, source], cfg, consts)?;
    let pf = merge(flatten(field, 1.0));
    let ps = merge(flatten(source, 1.0));
    if pf.is_empty() || ps.is_empty() {
        return Ok(0.0);
    }
    let (values, _, _) = refine(cfg, |level| {
        let (w, abs) = field_overlap(&pf, &ps, level, cfg);
        (vec![-consts.g * w], consts.g * abs)
    })?;
    Ok(values[0])
}

/// Newtonian potential φ(x) in J/kg, using the default quadrature
/// configuration for the few shapes without a closed form.
pub fn potential(dist: &MassDistribution, x: &Vec3, consts: &PhysicalConstants) -> Result<f64, MassDistError> {
    potential_with(dist, x, &QuadratureConfig::default(), consts)
}

pub fn potential_with(
    dist: &MassDistribution,
    x: &Vec3,
    cfg: &QuadratureConfig,
    consts: &PhysicalConstants,
) -> Result<f64, MassDistError> {
    validate_inputs(&[dist], cfg, consts)?;
    check_finite_vec("x", x)?;
    let level = Level::new(cfg.grid_resolution, 2);
    let v: f64 = flatten(dist, 1.0)
        .iter()
        .map(|p| p.density * primitive_potential(&p.shape, &(x - p.center), level, cfg.singularity_scheme, p.cell.is_some()))
        .sum();
    Ok(-consts.g * v)
}

/// Newtonian-limit proper-time rate dτ/dt ≈ 1 + φ(x)/c².
pub fn time_dilation_factor(dist: &MassDistribution, x: &Vec3, consts: &PhysicalConstants) -> Result<f64, MassDistError> {
    let phi = potential(dist, x, consts)?;
    Ok(1.0 + phi / (consts.c_light * consts.c_light))
}
