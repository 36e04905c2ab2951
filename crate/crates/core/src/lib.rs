//! Phenomenological model of gravity-induced state reduction.
//!
//! * [`massdist`]: mass-density distributions, the coupling energy between
//!   two of them, potentials and energy uncertainties.
//! * [`solidstate`]: order-of-magnitude estimates for solids, fluids and
//!   single-photon detectors.
//! * [`reduction`]: trigger rates, reduction probabilities and the outcome
//!   rule applied when a trigger fires.
//! * [`montecarlo`]: stochastic simulation of the trigger race.
//! * [`scenarios`]: builders for the standard experiments.

pub mod constants;
pub mod massdist;
pub mod montecarlo;
pub mod quadrature;
pub mod reduction;
pub mod scenarios;
pub mod solidstate;

pub use constants::PhysicalConstants;
pub use massdist::{DensityGrid, MassDistribution, QuadratureConfig, SingularityScheme, Vec3};
pub use montecarlo::{McEstimate, TrialConfig};
pub use reduction::{CouplingProfile, OutcomeDistribution, ProfileSet, Superposition};
pub use scenarios::{BuilderSpec, Scenario};
pub use solidstate::{DetectorParams, Material};
