//! Classical mass-density distributions and the gravitational functionals
//! evaluated on them: the Newtonian potential, the self-energy of the
//! density difference between two states, and its split into the two
//! per-state energy uncertainties.
//!
//! Two independent numerical routes are kept on purpose. [`pair_eg`]
//! evaluates the six-dimensional Coulomb-type double integral directly,
//! reduced to a regular double surface integral per pair of uniform
//! primitives. [`energy_fuzziness_pair`] integrates each state's density
//! against the closed-form potential of the other state.

mod coupling;
mod kernel;
mod primitive;
mod raster;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coupling::{
    energy_fuzziness_pair, pair_eg, pair_eg_detailed, potential, potential_energy, potential_with, sphere_pair_eg,
    time_dilation_factor, CouplingEstimate,
};
pub use raster::{mean_distribution, rasterize, GridSpec, MAX_RASTER_CELLS, MIN_CELLS_PER_FEATURE};

pub type Vec3 = Vector3<f64>;

/// A classical mass-density field in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MassDistribution {
    UniformSphere {
        mass: f64,
        diameter: f64,
        #[serde(default = "Vec3::zeros")]
        center: Vec3,
    },
    UniformRod {
        mass: f64,
        length: f64,
        diameter: f64,
        axis: Vec3,
        #[serde(default = "Vec3::zeros")]
        center: Vec3,
    },
    /// Each nucleus is a uniform sphere of diameter `nucleus_diameter`.
    NucleusLattice {
        nucleus_mass: f64,
        nucleus_diameter: f64,
        positions: Vec<Vec3>,
    },
    Grid(DensityGrid),
    Displaced {
        base: Box<MassDistribution>,
        offset: Vec3,
    },
}

/// Piecewise-constant density on an axis-aligned cubic lattice.
///
/// Cell `(i, j, k)` spans `origin + cell_size * [i, i+1) x [j, j+1) x [k, k+1)`
/// and its density is stored at `densities[(i * ny + j) * nz + k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityGrid {
    pub origin: Vec3,
    pub cell_size: f64,
    pub shape: [usize; 3],
    pub densities: Vec<f64>,
}

impl DensityGrid {
    pub fn zeros(origin: Vec3, cell_size: f64, shape: [usize; 3]) -> Self {
        Self {
            origin,
            cell_size,
            shape,
            densities: vec![0.0; shape[0] * shape[1] * shape[2]],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.powi(3)
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.cell_size * Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5)
    }

    pub fn total_mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.cell_volume()
    }

    /// Iterates `(i, j, k, density)` over every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let [_, ny, nz] = self.shape;
        self.densities.iter().enumerate().map(move |(idx, &rho)| {
            let k = idx % nz;
            let j = (idx / nz) % ny;
            let i = idx / (ny * nz);
            (i, j, k, rho)
        })
    }
}

/// How the coincident-cell singularity of the 1/r kernel is handled when a
/// sampled grid enters a double integral or a potential evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityScheme {
    /// Exact cube-averaged kernel for the coincident cell and its near
    /// neighbours; point masses beyond.
    #[default]
    CellAverage,
    /// Point-mass kernel between cell midpoints; coincident cells are split
    /// into 2x2x2 offset sub-midpoints.
    OffsetMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Nodes (or cells) per shortest feature at the coarsest level.
    pub grid_resolution: usize,
    pub singularity_scheme: SingularityScheme,
    pub rel_tolerance: f64,
    /// Number of refinement levels tried before giving up.
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 8,
            singularity_scheme: SingularityScheme::CellAverage,
            rel_tolerance: 1e-4,
            max_refinements: 5,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerance(mut self, rel_tolerance: f64) -> Self {
        self.rel_tolerance = rel_tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), MassDistError> {
        if self.grid_resolution < 2 {
            return Err(MassDistError::InvalidConfig(format!(
                "grid_resolution must be at least 2, got {}",
                self.grid_resolution
            )));
        }
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(MassDistError::InvalidConfig(format!(
                "rel_tolerance must lie in (0, 1), got {}",
                self.rel_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassDistError {
    #[error("invalid parameter `{name}`: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("nuclei {first} and {second} overlap (distance {distance:e} m < diameter {diameter:e} m)")]
    LatticeOverlap {
        first: usize,
        second: usize,
        distance: f64,
        diameter: f64,
    },
    #[error("grid shape {shape:?} needs {expected} densities, got {actual}")]
    GridShape {
        shape: [usize; 3],
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Constants(#[from] crate::constants::InvalidConstant),
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
    #[error("quadrature did not reach the requested tolerance after {refinements} refinements (last {last:e}, previous {previous:e})")]
    Convergence {
        last: f64,
        previous: f64,
        refinements: usize,
    },
    #[error("rasterization extent needs {cells} cells, above the limit of {limit}")]
    RasterExtent { cells: u128, limit: u128 },
    #[error("weights must be non-negative and sum to 1 (sum = {sum})")]
    Weights { sum: f64 },
    #[error("{distributions} distributions but {weights} weights")]
    LengthMismatch { distributions: usize, weights: usize },
}

fn check_finite_vec(name: &'static str, v: &Vec3) -> Result<(), MassDistError> {
    for &c in v.iter() {
        if !c.is_finite() {
            return Err(MassDistError::InvalidParameter {
                name,
                value: c,
                reason: "must be finite",
            });
        }
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<(), MassDistError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(MassDistError::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn check_mass(name: &'static str, value: f64) -> Result<(), MassDistError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(MassDistError::InvalidParameter {
            name,
            value,
            reason: "must be finite and non-negative",
        })
    }
}

impl MassDistribution {
    pub fn sphere(mass: f64, diameter: f64, center: Vec3) -> Self {
        Self::UniformSphere {
            mass,
            diameter,
            center,
        }
    }

    pub fn rod(mass: f64, length: f64, diameter: f64, axis: Vec3, center: Vec3) -> Self {
        Self::UniformRod {
            mass,
            length,
            diameter,
            axis,
            center,
        }
    }

    pub fn lattice(nucleus_mass: f64, nucleus_diameter: f64, positions: Vec<Vec3>) -> Self {
        Self::NucleusLattice {
            nucleus_mass,
            nucleus_diameter,
            positions,
        }
    }

    /// The same field rigidly shifted by `offset`.
    pub fn displaced(self, offset: Vec3) -> Self {
        Self::Displaced {
            base: Box::new(self),
            offset,
        }
    }

    pub fn validate(&self) -> Result<(), MassDistError> {
        match self {
            Self::UniformSphere {
                mass,
                diameter,
                center,
            } => {
                check_mass("mass", *mass)?;
                check_positive("diameter", *diameter)?;
                check_finite_vec("center", center)
            }
            Self::UniformRod {
                mass,
                length,
                diameter,
                axis,
                center,
            } => {
                check_mass("mass", *mass)?;
                check_positive("length", *length)?;
                check_positive("diameter", *diameter)?;
                check_finite_vec("axis", axis)?;
                check_finite_vec("center", center)?;
                let norm = axis.norm();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(MassDistError::InvalidParameter {
                        name: "axis",
                        value: norm,
                        reason: "must be a unit vector",
                    });
                }
                Ok(())
            }
            Self::NucleusLattice {
                nucleus_mass,
                nucleus_diameter,
                positions,
            } => {
                check_mass("nucleus_mass", *nucleus_mass)?;
                check_positive("nucleus_diameter", *nucleus_diameter)?;
                for p in positions {
                    check_finite_vec("positions", p)?;
                }
                // Touching is allowed, interpenetration is not.
                let limit = nucleus_diameter * (1.0 - 1e-12);
                for i in 0..positions.len() {
                    for j in i + 1..positions.len() {
                        let distance = (positions[i] - positions[j]).norm();
                        if distance < limit {
                            return Err(MassDistError::LatticeOverlap {
                                first: i,
                                second: j,
                                distance,
                                diameter: *nucleus_diameter,
                            });
                        }
                    }
                }
                Ok(())
            }
            Self::Grid(grid) => {
                check_finite_vec("origin", &grid.origin)?;
                check_positive("cell_size", grid.cell_size)?;
                let expected = grid.shape.iter().product::<usize>();
                if expected != grid.densities.len() {
                    return Err(MassDistError::GridShape {
                        shape: grid.shape,
                        expected,
                        actual: grid.densities.len(),
                    });
                }
                for &rho in &grid.densities {
                    check_mass("densities", rho)?;
                }
                Ok(())
            }
            Self::Displaced { base, offset } => {
                check_finite_vec("offset", offset)?;
                base.validate()
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::UniformSphere { mass, .. } | Self::UniformRod { mass, .. } => *mass,
            Self::NucleusLattice {
                nucleus_mass,
                positions,
                ..
            } => nucleus_mass * positions.len() as f64,
            Self::Grid(grid) => grid.total_mass(),
            Self::Displaced { base, .. } => base.total_mass(),
        }
    }

    /// Smallest geometric feature: a diameter or a cell size.
    pub fn smallest_feature(&self) -> f64 {
        match self {
            Self::UniformSphere { diameter, .. } | Self::UniformRod { diameter, .. } => *diameter,
            Self::NucleusLattice {
                nucleus_diameter, ..
            } => *nucleus_diameter,
            Self::Grid(grid) => grid.cell_size,
            Self::Displaced { base, .. } => base.smallest_feature(),
        }
    }

    /// Axis-aligned bounding box `(min, max)` of the support. `None` when
    /// the distribution is empty.
    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        primitive::flatten(self, 1.0)
            .iter()
            .map(|p| p.bounding_box())
            .reduce(|(lo1, hi1), (lo2, hi2)| (lo1.inf(&lo2), hi1.sup(&hi2)))
    }
}
