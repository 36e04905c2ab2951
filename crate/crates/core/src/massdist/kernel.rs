//! Pair integrals ∫_a ∫_b dx dy / |x − y| and potentials ∫_b dy / |x − y|
//! of uniform unit-density primitives.
//!
//! Overlapping or touching pairs use the identity
//! `∫_a ∫_b 1/|x−y| = −½ ∮_∂a ∮_∂b (n_x·n_y) |x−y| dS_x dS_y`,
//! which follows from `Δ|x−y| = 2/|x−y|` applied twice. The surface
//! integrand is continuous, so tensor Gauss rules converge without any
//! singular correction; the second surface uses shifted nodes so that no
//! two nodes coincide on shared surfaces.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;

use super::primitive::{Primitive, Shape, SurfaceNode, VolumeNode};
use super::{SingularityScheme, Vec3};
use crate::quadrature::GaussLegendre;

/// Lattice offsets up to this Chebyshev distance use the tabulated
/// cube-cube kernel; farther cells interact as point masses.
pub(crate) const LATTICE_NEAR: i64 = 4;

/// Node counts for one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Level {
    pub surface: usize,
    pub volume: usize,
}

impl Level {
    pub fn new(grid_resolution: usize, refinement: usize) -> Self {
        let scale = 1.5f64.powi(refinement as i32);
        let base_surface = (2 * grid_resolution).max(12) as f64;
        let base_volume = grid_resolution.max(6) as f64;
        Self {
            surface: (base_surface * scale).round() as usize,
            volume: (base_volume * scale).round() as usize,
        }
    }
}

/// `∫∫ 1/|p − q − d|` over two surface rules, `d` being the offset of b's
/// center from a's.
pub(crate) fn surface_pair(a: &[SurfaceNode], b: &[SurfaceNode], d: &Vec3) -> f64 {
    let rows: Vec<f64> = a
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = 0.0;
            for x in chunk {
                let px = x.p - d;
                let mut row = 0.0;
                for y in b {
                    let r = (px - y.p).norm();
                    row += x.wn.dot(&y.wn) * r;
                }
                acc += row;
            }
            acc
        })
        .collect();
    -0.5 * rows.iter().sum::<f64>()
}

pub(crate) fn volume_pair(a: &[VolumeNode], b: &[VolumeNode], d: &Vec3) -> f64 {
    let mut total = 0.0;
    for x in a {
        let px = x.p - d;
        let mut row = 0.0;
        for y in b {
            row += y.w / (px - y.p).norm();
        }
        total += x.w * row;
    }
    total
}

/// Potential of a unit-density ball of radius `radius` at distance `r`.
pub(crate) fn sphere_potential(radius: f64, r: f64) -> f64 {
    let volume = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    if r >= radius {
        volume / r
    } else {
        2.0 / 3.0 * std::f64::consts::PI * (3.0 * radius * radius - r * r)
    }
}

/// Antiderivative of 1/r over a box corner at `(x, y, z)` relative to the
/// field point. Terms whose prefactor vanishes are dropped, which also
/// removes the removable singularities on faces and edges.
fn box_corner(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    let mut f = 0.0;
    for (a, b, c) in [(x, y, z), (y, z, x), (z, x, y)] {
        let bc = b * c;
        if bc != 0.0 {
            f += bc * (a / (b * b + c * c).sqrt()).asinh();
        }
        if a != 0.0 {
            f -= 0.5 * a * a * (bc / (a * r)).atan();
        }
    }
    f
}

/// Potential of a unit-density axis-aligned cube of half side `half`
/// centered at the origin, evaluated at `p`. Closed form, valid inside and
/// outside.
pub(crate) fn cube_potential(half: f64, p: &Vec3) -> f64 {
    let lo = Vec3::repeat(-half) - p;
    let hi = Vec3::repeat(half) - p;
    let mut v = 0.0;
    for (i, x) in [lo.x, hi.x].into_iter().enumerate() {
        for (j, y) in [lo.y, hi.y].into_iter().enumerate() {
            for (k, z) in [lo.z, hi.z].into_iter().enumerate() {
                let sign = if (i + j + k) % 2 == 1 { 1.0 } else { -1.0 };
                v += sign * box_corner(x, y, z);
            }
        }
    }
    v
}

/// Potential of a unit-density primitive at `p` relative to its center.
pub(crate) fn primitive_potential(shape: &Shape, p: &Vec3, level: Level, scheme: SingularityScheme, in_lattice: bool) -> f64 {
    match *shape {
        Shape::Sphere { radius } => sphere_potential(radius, p.norm()),
        Shape::Cube { half } => {
            if in_lattice && scheme == SingularityScheme::OffsetMidpoint && p.amax() > half {
                shape.volume() / p.norm()
            } else {
                cube_potential(half, p)
            }
        }
        Shape::Cylinder { .. } => {
            if p.norm() > 2.0 * shape.bounding_radius() {
                shape
                    .volume_nodes(level.volume)
                    .iter()
                    .map(|n| n.w / (p - n.p).norm())
                    .sum()
            } else {
                // V(x) = ½ ∮ (y − x)·n / |y − x| dS
                0.5 * shape
                    .surface_nodes(level.surface, false)
                    .iter()
                    .map(|n| {
                        let r = n.p - p;
                        let len = r.norm();
                        if len > 0.0 {
                            r.dot(&n.wn) / len
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            }
        }
    }
}

/// Unit-cube kernel `∫∫ 1/|x − y|` between lattice cells `offset` apart,
/// for unit spacing. Scale by `h⁵` for spacing `h`.
pub(crate) fn lattice_kernel(offset: [i64; 3], scheme: SingularityScheme) -> f64 {
    let mut key = offset.map(i64::abs);
    key.sort_unstable();
    let far = key[2] > LATTICE_NEAR;
    let dist = || Vec3::new(key[0] as f64, key[1] as f64, key[2] as f64).norm();
    match scheme {
        SingularityScheme::OffsetMidpoint => {
            if key == [0, 0, 0] {
                offset_midpoint_self()
            } else {
                1.0 / dist()
            }
        }
        SingularityScheme::CellAverage if far => 1.0 / dist(),
        SingularityScheme::CellAverage => {
            static TABLE: OnceLock<Mutex<HashMap<[i64; 3], f64>>> = OnceLock::new();
            let table = TABLE.get_or_init(|| Mutex::new(HashMap::new()));
            if let Some(v) = table.lock().expect("kernel table poisoned").get(&key) {
                return *v;
            }
            let value = cube_pair_reference(key);
            table.lock().expect("kernel table poisoned").insert(key, value);
            value
        }
    }
}

/// Mean of 1/r over distinct pairs of the 2×2×2 sub-cell midpoints of a
/// unit cube.
fn offset_midpoint_self() -> f64 {
    (6.0 + 3.0 * 2f64.sqrt() + 2.0 / 3f64.sqrt()) / 7.0
}

fn cube_pair_reference(key: [i64; 3]) -> f64 {
    // ∫_a V_b with the closed-form potential of b, by composite Gauss rules
    // on a 4x4x4 split of a. V_b is analytic inside a except for derivative
    // singularities on ∂a, which the split confines to thin panels.
    const SPLIT: usize = 4;
    let d = Vec3::new(key[0] as f64, key[1] as f64, key[2] as f64);
    let gl = GaussLegendre::of_order(10);
    let pitch = 1.0 / SPLIT as f64;
    let mut pts = Vec::with_capacity(SPLIT * gl.len());
    for s in 0..SPLIT {
        let lo = -0.5 + s as f64 * pitch;
        pts.extend(gl.mapped(lo, lo + pitch));
    }
    let mut total = 0.0;
    for &(x, wx) in &pts {
        for &(y, wy) in &pts {
            for &(z, wz) in &pts {
                total += wx * wy * wz * cube_potential(0.5, &(Vec3::new(x, y, z) - d));
            }
        }
    }
    total
}

/// Euclidean distance from `p` (relative to a cube center) to the cube.
fn distance_to_cube(half: f64, p: &Vec3) -> f64 {
    p.map(|c| (c.abs() - half).max(0.0)).norm()
}

/// Whether a pair integral is level independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairClass {
    Exact,
    SelfTerm,
    Separated,
    Near,
    /// A shape paired with its own shifted copy; evaluated together with
    /// both self-terms through [`shift_difference`].
    Congruent,
}

pub(crate) fn classify(a: &Primitive, b: &Primitive) -> PairClass {
    let d = b.center - a.center;
    let dist = d.norm();
    if let (Some(ca), Some(cb)) = (a.cell, b.cell) {
        if ca.origin == cb.origin && a.shape == b.shape {
            return PairClass::Exact;
        }
    }
    match (a.shape, b.shape) {
        (Shape::Sphere { radius: ra }, Shape::Sphere { radius: rb }) if dist >= ra + rb => {
            return PairClass::Exact
        }
        (Shape::Sphere { radius }, Shape::Cube { half }) if distance_to_cube(half, &-d) >= radius => {
            return PairClass::Exact
        }
        (Shape::Cube { half }, Shape::Sphere { radius }) if distance_to_cube(half, &d) >= radius => {
            return PairClass::Exact
        }
        _ => {}
    }
    if dist == 0.0 && a.shape == b.shape {
        PairClass::SelfTerm
    } else if dist >= 2.0 * (a.shape.bounding_radius() + b.shape.bounding_radius()) {
        PairClass::Separated
    } else {
        PairClass::Near
    }
}

/// `∫_a ∫_b 1/|x − y|` for unit densities.
pub(crate) fn pair_integral(a: &Primitive, b: &Primitive, class: PairClass, level: Level, scheme: SingularityScheme) -> f64 {
    let d = b.center - a.center;
    match class {
        PairClass::Exact => exact_pair(a, b, &d, scheme),
        PairClass::SelfTerm => self_integral(&a.shape, level),
        PairClass::Separated => {
            volume_pair(&a.shape.volume_nodes(level.volume), &b.shape.volume_nodes(level.volume), &d)
        }
        PairClass::Congruent => unreachable!("congruent pairs are combined with their self-terms"),
        PairClass::Near => surface_pair(
            &a.shape.surface_nodes(level.surface, false),
            &b.shape.surface_nodes(level.surface, true),
            &d,
        ),
    }
}

fn exact_pair(a: &Primitive, b: &Primitive, d: &Vec3, scheme: SingularityScheme) -> f64 {
    match (a.shape, b.shape, a.cell, b.cell) {
        (Shape::Cube { half }, _, Some(ca), Some(cb)) if ca.origin == cb.origin && a.shape == b.shape => {
            let offset = [
                cb.ijk[0] - ca.ijk[0],
                cb.ijk[1] - ca.ijk[1],
                cb.ijk[2] - ca.ijk[2],
            ];
            lattice_kernel(offset, scheme) * (2.0 * half).powi(5)
        }
        (Shape::Sphere { .. }, Shape::Sphere { .. }, _, _) => a.shape.volume() * b.shape.volume() / d.norm(),
        (Shape::Sphere { .. }, Shape::Cube { half }, _, _) => a.shape.volume() * cube_potential(half, &-d),
        (Shape::Cube { half }, Shape::Sphere { .. }, _, _) => b.shape.volume() * cube_potential(half, d),
        _ => unreachable!("pair classified exact without a closed form"),
    }
}

/// `2 J(0) − J(s) − J(−s)` for a centrally symmetric shape and its copy
/// shifted by `s`, where `J(s) = ∫_a ∫_{a+s} 1/|x − y|`.
///
/// All three terms share one pair of node sets, so for shifts below the
/// node spacing every node pair contributes a smooth second difference and
/// the result keeps its relative accuracy as `s → 0` instead of being
/// swamped by the quadrature error of the much larger self-term.
pub(crate) fn shift_difference(shape: &Shape, s: &Vec3, level: Level) -> f64 {
    let a = shape.surface_nodes(level.surface, false);
    let b = shape.surface_nodes(level.surface, true);
    let rows: Vec<f64> = a
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = 0.0;
            for x in chunk {
                let mut row = 0.0;
                for y in &b {
                    let r = x.p - y.p;
                    let second = 2.0 * r.norm() - (r - s).norm() - (r + s).norm();
                    row += x.wn.dot(&y.wn) * second;
                }
                acc += row;
            }
            acc
        })
        .collect();
    -0.5 * rows.iter().sum::<f64>()
}

/// Same quantity as [`shift_difference`] for a ball of radius `radius`,
/// from the closed-form potential: `∫_a [2V(x) − V(x − s) − V(x + s)] dx`.
///
/// Where both `x ± s` stay inside the ball the integrand is the constant
/// `(4π/3)|s|²`. The remaining shell is integrated in `(r, cos θ)` about the
/// shift axis, split at the two spheres `|x ± s| = radius` where the
/// integrand has kinks, so every panel is smooth.
pub(crate) fn ball_shift_difference(radius: f64, s: &Vec3, level: Level) -> f64 {
    use std::f64::consts::PI;
    let shift = s.norm();
    if shift == 0.0 {
        return 0.0;
    }
    let inner = (radius - shift).max(0.0);
    let mut total = 4.0 / 3.0 * PI * shift * shift * (4.0 / 3.0 * PI * inner.powi(3));
    let gl = GaussLegendre::of_order(level.volume.max(8));
    let v = |r: f64| sphere_potential(radius, r);
    for (r, wr) in gl.mapped(inner, radius) {
        let centre = 2.0 * v(r);
        let kink = (radius * radius - r * r - shift * shift) / (2.0 * r * shift);
        let mut cuts = vec![-1.0, 1.0];
        for c in [kink, -kink] {
            if c > -1.0 && c < 1.0 {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut ring = 0.0;
        for w in cuts.windows(2) {
            for (c, wc) in gl.mapped(w[0], w[1]) {
                let base = r * r + shift * shift;
                let minus = (base - 2.0 * r * shift * c).max(0.0).sqrt();
                let plus = (base + 2.0 * r * shift * c).max(0.0).sqrt();
                ring += wc * (centre - v(minus) - v(plus));
            }
        }
        total += wr * 2.0 * PI * r * r * ring;
    }
    total
}

/// Self-interaction of a primitive, cached per shape and level.
pub(crate) fn self_integral(shape: &Shape, level: Level) -> f64 {
    type Key = ([u64; 6], Level);
    static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (shape.key(), level);
    if let Some(v) = cache.lock().expect("self-term cache poisoned").get(&key) {
        return *v;
    }
    let value = surface_pair(
        &shape.surface_nodes(level.surface, false),
        &shape.surface_nodes(level.surface, true),
        &Vec3::zeros(),
    );
    cache.lock().expect("self-term cache poisoned").insert(key, value);
    value
}
