//! Uniform-density building blocks. Every distribution flattens into a list
//! of spheres, cylinders and axis-aligned cubes with a (signed) density.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::PI;

use super::{MassDistribution, Vec3};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Shape {
    Sphere { radius: f64 },
    Cylinder { radius: f64, half_length: f64, axis: Vec3 },
    Cube { half: f64 },
}

/// Position of a cube inside a regular lattice of spacing `2 * half`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LatticeCell {
    pub origin: Vec3,
    pub ijk: [i64; 3],
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Primitive {
    pub shape: Shape,
    pub center: Vec3,
    /// Density in kg/m³; negative for the subtracted state.
    pub density: f64,
    pub cell: Option<LatticeCell>,
}

/// Integration node relative to the primitive's center. For surface rules
/// `wn` is the quadrature weight times the outward unit normal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SurfaceNode {
    pub p: Vec3,
    pub wn: Vec3,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct VolumeNode {
    pub p: Vec3,
    pub w: f64,
}

impl Shape {
    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            Shape::Cylinder {
                radius,
                half_length,
                ..
            } => PI * radius * radius * 2.0 * half_length,
            Shape::Cube { half } => (2.0 * half).powi(3),
        }
    }

    /// Radius of the smallest centered ball containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Cylinder {
                radius,
                half_length,
                ..
            } => radius.hypot(half_length),
            Shape::Cube { half } => half * 3f64.sqrt(),
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Shape::Sphere { .. } => 0,
            Shape::Cylinder { .. } => 1,
            Shape::Cube { .. } => 2,
        }
    }

    /// Bit pattern identifying the shape up to translation.
    pub fn key(&self) -> [u64; 6] {
        match *self {
            Shape::Sphere { radius } => [0, radius.to_bits(), 0, 0, 0, 0],
            Shape::Cylinder {
                radius,
                half_length,
                axis,
            } => [
                1,
                radius.to_bits(),
                half_length.to_bits(),
                axis.x.to_bits(),
                axis.y.to_bits(),
                axis.z.to_bits(),
            ],
            Shape::Cube { half } => [2, half.to_bits(), 0, 0, 0, 0],
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match *self {
            Shape::Sphere { radius } => p.norm_squared() <= radius * radius,
            Shape::Cylinder {
                radius,
                half_length,
                axis,
            } => {
                let along = p.dot(&axis);
                along.abs() <= half_length && (p - along * axis).norm_squared() <= radius * radius
            }
            Shape::Cube { half } => p.amax() <= half,
        }
    }

    pub fn surface_nodes(&self, n: usize, stagger: bool) -> Vec<SurfaceNode> {
        match *self {
            Shape::Sphere { radius } => sphere_surface(radius, n, stagger),
            Shape::Cylinder {
                radius,
                half_length,
                axis,
            } => cylinder_surface(radius, half_length, &axis, n, stagger),
            Shape::Cube { half } => cube_surface(half, if stagger { n + 1 } else { n }),
        }
    }

    pub fn volume_nodes(&self, n: usize) -> Vec<VolumeNode> {
        match *self {
            Shape::Sphere { radius } => sphere_volume(radius, n),
            Shape::Cylinder {
                radius,
                half_length,
                axis,
            } => cylinder_volume(radius, half_length, &axis, n),
            Shape::Cube { half } => cube_volume(half, n),
        }
    }
}

impl Primitive {
    pub fn mass(&self) -> f64 {
        self.density * self.shape.volume()
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let ext = match self.shape {
            Shape::Sphere { radius } => Vec3::repeat(radius),
            Shape::Cube { half } => Vec3::repeat(half),
            Shape::Cylinder {
                radius,
                half_length,
                axis,
            } => axis.abs() * half_length
                + radius * Vec3::from_fn(|i, _| (1.0 - axis[i] * axis[i]).max(0.0).sqrt()),
        };
        (self.center - ext, self.center + ext)
    }

    fn cmp_canonical(&self, other: &Self) -> Ordering {
        self.shape
            .kind()
            .cmp(&other.shape.kind())
            .then_with(|| self.shape.key().cmp(&other.shape.key()))
            .then_with(|| self.center.x.total_cmp(&other.center.x))
            .then_with(|| self.center.y.total_cmp(&other.center.y))
            .then_with(|| self.center.z.total_cmp(&other.center.z))
    }
}

/// Orthonormal pair perpendicular to the unit vector `axis`.
pub(crate) fn perpendicular_frame(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = (helper - helper.dot(axis) * axis).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Flattens a distribution into uniform primitives carrying `sign * density`.
/// Zero-mass parts are skipped.
pub(crate) fn flatten(dist: &MassDistribution, sign: f64) -> Vec<Primitive> {
    let mut out = Vec::new();
    flatten_into(dist, sign, Vec3::zeros(), &mut out);
    out
}

fn flatten_into(dist: &MassDistribution, sign: f64, shift: Vec3, out: &mut Vec<Primitive>) {
    match dist {
        MassDistribution::UniformSphere {
            mass,
            diameter,
            center,
        } => {
            if *mass > 0.0 {
                let shape = Shape::Sphere {
                    radius: 0.5 * diameter,
                };
                out.push(Primitive {
                    shape,
                    center: center + shift,
                    density: sign * mass / shape.volume(),
                    cell: None,
                });
            }
        }
        MassDistribution::UniformRod {
            mass,
            length,
            diameter,
            axis,
            center,
        } => {
            if *mass > 0.0 {
                let shape = Shape::Cylinder {
                    radius: 0.5 * diameter,
                    half_length: 0.5 * length,
                    axis: axis.normalize(),
                };
                out.push(Primitive {
                    shape,
                    center: center + shift,
                    density: sign * mass / shape.volume(),
                    cell: None,
                });
            }
        }
        MassDistribution::NucleusLattice {
            nucleus_mass,
            nucleus_diameter,
            positions,
        } => {
            if *nucleus_mass > 0.0 {
                let shape = Shape::Sphere {
                    radius: 0.5 * nucleus_diameter,
                };
                let density = sign * nucleus_mass / shape.volume();
                out.extend(positions.iter().map(|p| Primitive {
                    shape,
                    center: p + shift,
                    density,
                    cell: None,
                }));
            }
        }
        MassDistribution::Grid(grid) => {
            let half = 0.5 * grid.cell_size;
            let origin = grid.origin + shift;
            for (i, j, k, rho) in grid.cells() {
                if rho > 0.0 {
                    let ijk = [i as i64, j as i64, k as i64];
                    out.push(Primitive {
                        shape: Shape::Cube { half },
                        center: cell_center(&origin, grid.cell_size, ijk),
                        density: sign * rho,
                        cell: Some(LatticeCell { origin, ijk }),
                    });
                }
            }
        }
        MassDistribution::Displaced { base, offset } => {
            flatten_into(base, sign, shift + offset, out);
        }
    }
}

fn cell_center(origin: &Vec3, h: f64, ijk: [i64; 3]) -> Vec3 {
    origin + h * Vec3::new(ijk[0] as f64 + 0.5, ijk[1] as f64 + 0.5, ijk[2] as f64 + 0.5)
}

/// Signed primitives of `ρ1 − ρ2` in canonical order.
///
/// Identical primitives of opposite sign cancel exactly, and cubes that lie
/// on a common lattice are merged cell by cell. The result does not depend
/// on which distribution is passed first beyond a global sign, so the
/// quadratic functionals built from it are exactly symmetric.
pub(crate) fn signed_difference(d1: &MassDistribution, d2: &MassDistribution) -> Vec<Primitive> {
    let mut all = flatten(d1, 1.0);
    all.extend(flatten(d2, -1.0));
    merge(all)
}

/// Merges coincident primitives and sorts canonically.
pub(crate) fn merge(prims: Vec<Primitive>) -> Vec<Primitive> {
    let (cubes, others): (Vec<_>, Vec<_>) = prims.into_iter().partition(|p| p.cell.is_some());

    let mut merged: Vec<Primitive> = Vec::new();
    let mut index: HashMap<([u64; 6], [u64; 3]), usize> = HashMap::new();
    for p in others {
        let key = (
            p.shape.key(),
            [p.center.x.to_bits(), p.center.y.to_bits(), p.center.z.to_bits()],
        );
        match index.get(&key) {
            Some(&i) => merged[i].density += p.density,
            None => {
                index.insert(key, merged.len());
                merged.push(p);
            }
        }
    }

    merged.extend(merge_cells(cubes));
    merged.retain(|p| p.density != 0.0);
    merged.sort_by(|a, b| a.cmp_canonical(b));
    merged
}

fn merge_cells(cubes: Vec<Primitive>) -> Vec<Primitive> {
    if cubes.is_empty() {
        return Vec::new();
    }
    // Group grid origins into compatible lattices; each lattice is anchored
    // at its lexicographically smallest origin so the anchor does not
    // depend on argument order.
    let mut origins: Vec<(u64, Vec3)> = Vec::new();
    for p in &cubes {
        let Shape::Cube { half } = p.shape else {
            unreachable!()
        };
        let origin = p.cell.expect("cube without lattice").origin;
        if !origins
            .iter()
            .any(|(h, o)| *h == half.to_bits() && o == &origin)
        {
            origins.push((half.to_bits(), origin));
        }
    }
    origins.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.x.total_cmp(&b.1.x))
            .then_with(|| a.1.y.total_cmp(&b.1.y))
            .then_with(|| a.1.z.total_cmp(&b.1.z))
    });
    let mut anchors: Vec<(u64, Vec3)> = Vec::new();
    let mut anchor_of: Vec<(usize, [i64; 3])> = Vec::new();
    for (hbits, origin) in &origins {
        let h = 2.0 * f64::from_bits(*hbits);
        let found = anchors.iter().enumerate().find_map(|(ai, (abits, anchor))| {
            if abits != hbits {
                return None;
            }
            let shift = (origin - anchor) / h;
            let rounded = shift.map(f64::round);
            ((shift - rounded).amax() < 1e-9)
                .then(|| (ai, [rounded.x as i64, rounded.y as i64, rounded.z as i64]))
        });
        match found {
            Some(entry) => anchor_of.push(entry),
            None => {
                anchor_of.push((anchors.len(), [0, 0, 0]));
                anchors.push((*hbits, *origin));
            }
        }
    }

    let mut cells: Vec<(usize, [i64; 3], f64)> = Vec::new();
    let mut index: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
    for p in cubes {
        let Shape::Cube { half } = p.shape else {
            unreachable!()
        };
        let cell = p.cell.expect("cube without lattice");
        let oi = origins
            .iter()
            .position(|(h, o)| *h == half.to_bits() && o == &cell.origin)
            .expect("origin registered");
        let (ai, shift) = anchor_of[oi];
        let ijk = [
            cell.ijk[0] + shift[0],
            cell.ijk[1] + shift[1],
            cell.ijk[2] + shift[2],
        ];
        match index.get(&(ai, ijk)) {
            Some(&i) => cells[i].2 += p.density,
            None => {
                index.insert((ai, ijk), cells.len());
                cells.push((ai, ijk, p.density));
            }
        }
    }
    cells
        .into_iter()
        .map(|(ai, ijk, density)| {
            let (hbits, origin) = anchors[ai];
            let half = f64::from_bits(hbits);
            Primitive {
                shape: Shape::Cube { half },
                center: cell_center(&origin, 2.0 * half, ijk),
                density,
                cell: Some(LatticeCell { origin, ijk }),
            }
        })
        .collect()
}

fn sphere_surface(radius: f64, n: usize, stagger: bool) -> Vec<SurfaceNode> {
    let gl = GaussLegendre::of_order(n);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let offset = if stagger { 0.5 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n_phi);
    for (&ct, &wt) in gl.nodes.iter().zip(&gl.weights) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..n_phi {
            let phi = (k as f64 + offset) * dphi;
            let normal = Vec3::new(st * phi.cos(), st * phi.sin(), ct);
            let w = wt * dphi * radius * radius;
            out.push(SurfaceNode {
                p: radius * normal,
                wn: w * normal,
            });
        }
    }
    out
}

fn cylinder_axial_order(radius: f64, half_length: f64, n: usize) -> usize {
    let ratio = half_length / (0.5 * PI * radius);
    ((n as f64 * ratio).ceil() as usize).clamp(n / 2 + 1, 6 * n)
}

fn cylinder_surface(radius: f64, half_length: f64, axis: &Vec3, n: usize, stagger: bool) -> Vec<SurfaceNode> {
    let (u, v) = perpendicular_frame(axis);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let offset = if stagger { 0.5 } else { 0.0 };
    let nz = cylinder_axial_order(radius, half_length, n) + stagger as usize;
    let nr = (n / 2).max(4) + stagger as usize;
    let gz = GaussLegendre::of_order(nz);
    let gr = GaussLegendre::of_order(nr);
    let mut out = Vec::new();
    for k in 0..n_phi {
        let phi = (k as f64 + offset) * dphi;
        let radial = phi.cos() * u + phi.sin() * v;
        for (z, wz) in gz.mapped(-half_length, half_length) {
            out.push(SurfaceNode {
                p: radius * radial + z * axis,
                wn: (wz * radius * dphi) * radial,
            });
        }
        for (r, wr) in gr.mapped(0.0, radius) {
            let w = wr * r * dphi;
            for sign in [-1.0, 1.0] {
                out.push(SurfaceNode {
                    p: r * radial + sign * half_length * axis,
                    wn: (sign * w) * axis,
                });
            }
        }
    }
    out
}

fn cube_surface(half: f64, n: usize) -> Vec<SurfaceNode> {
    let gl = GaussLegendre::of_order(n);
    let pts: Vec<(f64, f64)> = gl.mapped(-half, half).collect();
    let mut out = Vec::with_capacity(6 * n * n);
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            for &(s, ws) in &pts {
                for &(t, wt) in &pts {
                    let mut p = Vec3::zeros();
                    p[axis] = sign * half;
                    p[a1] = s;
                    p[a2] = t;
                    let mut wn = Vec3::zeros();
                    wn[axis] = sign * ws * wt;
                    out.push(SurfaceNode { p, wn });
                }
            }
        }
    }
    out
}

fn sphere_volume(radius: f64, n: usize) -> Vec<VolumeNode> {
    let gr = GaussLegendre::of_order(n);
    let gt = GaussLegendre::of_order(n);
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n * n * n_phi);
    for (r, wr) in gr.mapped(0.0, radius) {
        for (&ct, &wt) in gt.nodes.iter().zip(&gt.weights) {
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                out.push(VolumeNode {
                    p: r * Vec3::new(st * phi.cos(), st * phi.sin(), ct),
                    w: wr * r * r * wt * dphi,
                });
            }
        }
    }
    out
}

fn cylinder_volume(radius: f64, half_length: f64, axis: &Vec3, n: usize) -> Vec<VolumeNode> {
    let (u, v) = perpendicular_frame(axis);
    let gr = GaussLegendre::of_order(n);
    let gz = GaussLegendre::of_order(cylinder_axial_order(radius, half_length, n));
    let n_phi = 2 * n;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::new();
    for (r, wr) in gr.mapped(0.0, radius) {
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * dphi;
            let radial = phi.cos() * u + phi.sin() * v;
            for (z, wz) in gz.mapped(-half_length, half_length) {
                out.push(VolumeNode {
                    p: r * radial + z * axis,
                    w: wr * r * dphi * wz,
                });
            }
        }
    }
    out
}

fn cube_volume(half: f64, n: usize) -> Vec<VolumeNode> {
    let gl = GaussLegendre::of_order(n);
    let pts: Vec<(f64, f64)> = gl.mapped(-half, half).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &(x, wx) in &pts {
        for &(y, wy) in &pts {
            for &(z, wz) in &pts {
                out.push(VolumeNode {
                    p: Vec3::new(x, y, z),
                    w: wx * wy * wz,
                });
            }
        }
    }
    out
}
