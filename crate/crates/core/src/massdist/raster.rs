//! Rasterization onto a common cubic grid and the weighted mean density.

use serde::{Deserialize, Serialize};

use super::primitive::{flatten, Primitive, Shape};
use super::{check_positive, DensityGrid, MassDistError, MassDistribution, Vec3};

/// Minimum number of cells across the smallest feature of a smooth shape.
pub const MIN_CELLS_PER_FEATURE: usize = 8;
/// Upper bound on the number of cells of a rasterized grid.
pub const MAX_RASTER_CELLS: u128 = 1 << 24;

const SUBSAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec3,
    pub cell_size: f64,
    pub shape: [usize; 3],
}

impl GridSpec {
    /// Grid covering every distribution with the resolution rules above.
    /// Sampled inputs keep their own cell size and alignment.
    pub fn covering(dists: &[&MassDistribution]) -> Result<Self, MassDistError> {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut cell = f64::INFINITY;
        let mut anchor: Option<Vec3> = None;
        for d in dists {
            let Some((a, b)) = d.bounding_box() else {
                continue;
            };
            lo = lo.inf(&a);
            hi = hi.sup(&b);
            let (h, grid_origin) = resolution(d);
            if h < cell {
                cell = h;
                anchor = grid_origin;
            }
        }
        if !cell.is_finite() {
            return Err(MassDistError::InvalidParameter {
                name: "dists",
                value: 0.0,
                reason: "nothing to rasterize: all distributions are empty",
            });
        }
        if let Some(anchor) = anchor {
            lo = anchor + ((lo - anchor) / cell).map(|c| (c + 1e-9).floor()) * cell;
        }
        let span = (hi - lo) / cell;
        let dims = span.map(|c| (c - 1e-9).ceil().max(1.0));
        let cells = dims.iter().map(|&c| c as u128).product::<u128>();
        if !dims.iter().all(|c| c.is_finite()) || cells > MAX_RASTER_CELLS {
            return Err(MassDistError::RasterExtent {
                cells: if dims.iter().all(|c| c.is_finite()) { cells } else { u128::MAX },
                limit: MAX_RASTER_CELLS,
            });
        }
        Ok(Self {
            origin: lo,
            cell_size: cell,
            shape: [dims.x as usize, dims.y as usize, dims.z as usize],
        })
    }
}

fn resolution(d: &MassDistribution) -> (f64, Option<Vec3>) {
    match d {
        MassDistribution::Grid(g) => (g.cell_size, Some(g.origin)),
        MassDistribution::Displaced { base, offset } => {
            let (h, o) = resolution(base);
            (h, o.map(|o| o + offset))
        }
        other => (other.smallest_feature() / MIN_CELLS_PER_FEATURE as f64, None),
    }
}

/// Cell-averaged density of `dist` on `spec`. The mass of every primitive
/// inside the grid is preserved exactly.
pub fn rasterize(dist: &MassDistribution, spec: &GridSpec) -> Result<DensityGrid, MassDistError> {
    dist.validate()?;
    check_positive("cell_size", spec.cell_size)?;
    let mut grid = DensityGrid::zeros(spec.origin, spec.cell_size, spec.shape);
    for p in flatten(dist, 1.0) {
        deposit(&p, &mut grid, 1.0);
    }
    Ok(grid)
}

/// Weighted mean density `Σ wᵢ ρᵢ` on a common grid.
pub fn mean_distribution(dists: &[MassDistribution], weights: &[f64]) -> Result<DensityGrid, MassDistError> {
    if dists.len() != weights.len() {
        return Err(MassDistError::LengthMismatch {
            distributions: dists.len(),
            weights: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(MassDistError::Weights { sum });
    }
    for d in dists {
        d.validate()?;
    }
    let active: Vec<(&MassDistribution, f64)> = dists
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(d, &w)| (d, w))
        .collect();
    let spec = GridSpec::covering(&active.iter().map(|(d, _)| *d).collect::<Vec<_>>())?;
    let mut grid = DensityGrid::zeros(spec.origin, spec.cell_size, spec.shape);
    for (d, w) in active {
        for p in flatten(d, 1.0) {
            deposit(&p, &mut grid, w);
        }
    }
    Ok(grid)
}

fn deposit(p: &Primitive, grid: &mut DensityGrid, weight: f64) {
    let h = grid.cell_size;
    let (lo, hi) = p.bounding_box();
    let range = |axis: usize| {
        let a = ((lo[axis] - grid.origin[axis]) / h).floor().max(0.0) as usize;
        let b = (((hi[axis] - grid.origin[axis]) / h).ceil().max(0.0) as usize).min(grid.shape[axis]);
        a..b
    };
    let (ri, rj, rk) = (range(0), range(1), range(2));
    let mut fractions: Vec<(usize, f64)> = Vec::new();
    for i in ri {
        for j in rj.clone() {
            for k in rk.clone() {
                let cell_lo = grid.origin + h * Vec3::new(i as f64, j as f64, k as f64);
                let f = cell_fraction(p, &cell_lo, h);
                if f > 0.0 {
                    fractions.push((grid.index(i, j, k), f));
                }
            }
        }
    }
    let mass = p.mass() * weight;
    let covered: f64 = fractions.iter().map(|(_, f)| f).sum::<f64>() * grid.cell_volume();
    if covered > 0.0 {
        for (idx, f) in fractions {
            grid.densities[idx] += mass * f / covered;
        }
    } else {
        // Smaller than the sub-sampling pitch: deposit at the center cell.
        let c = ((p.center - grid.origin) / h).map(|c| c.floor());
        if (0..3).all(|a| c[a] >= 0.0 && (c[a] as usize) < grid.shape[a]) {
            let idx = grid.index(c.x as usize, c.y as usize, c.z as usize);
            grid.densities[idx] += mass / grid.cell_volume();
        }
    }
}

/// Fraction of the cell `[lo, lo + h]³` covered by the primitive.
fn cell_fraction(p: &Primitive, lo: &Vec3, h: f64) -> f64 {
    if let Shape::Cube { half } = p.shape {
        let overlap = (0..3)
            .map(|a| {
                let a_lo = lo[a].max(p.center[a] - half);
                let a_hi = (lo[a] + h).min(p.center[a] + half);
                (a_hi - a_lo).max(0.0)
            })
            .product::<f64>();
        return overlap / (h * h * h);
    }
    // Convex shapes: all corners inside means the whole cell is inside.
    let mut corners_inside = 0;
    for c in 0..8 {
        let corner = lo + h * Vec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64);
        if p.shape.contains(&(corner - p.center)) {
            corners_inside += 1;
        }
    }
    if corners_inside == 8 {
        return 1.0;
    }
    let step = h / SUBSAMPLES as f64;
    let mut inside = 0;
    for a in 0..SUBSAMPLES {
        for b in 0..SUBSAMPLES {
            for c in 0..SUBSAMPLES {
                let q = lo + step * Vec3::new(a as f64 + 0.5, b as f64 + 0.5, c as f64 + 0.5);
                if p.shape.contains(&(q - p.center)) {
                    inside += 1;
                }
            }
        }
    }
    inside as f64 / (SUBSAMPLES * SUBSAMPLES * SUBSAMPLES) as f64
}
