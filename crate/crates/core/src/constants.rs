//! Physical constants shared by every estimate in the crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// CODATA 2018 values in SI units, plus the dimensionless coupling
/// prefactor `xi` applied to every gravitational self-energy difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Gravitational constant, m³ kg⁻¹ s⁻².
    #[serde(rename = "G")]
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_boltzmann: f64,
    /// Speed of light, m/s.
    pub c_light: f64,
    /// Dimensionless prefactor of the coupling energy.
    #[serde(default = "default_xi")]
    pub xi: f64,
}

fn default_xi() -> f64 {
    1.0
}

/// Planck constant h, J s. Only used for photon momenta.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Electron rest mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: 6.674_30e-11,
            hbar: 1.054_571_817e-34,
            k_boltzmann: 1.380_649e-23,
            c_light: 299_792_458.0,
            xi: 1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("physical constant `{name}` must be finite and strictly positive, got {value}")]
pub struct InvalidConstant {
    pub name: &'static str,
    pub value: f64,
}

impl PhysicalConstants {
    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn validate(&self) -> Result<(), InvalidConstant> {
        for (name, value) in [
            ("G", self.g),
            ("hbar", self.hbar),
            ("k_boltzmann", self.k_boltzmann),
            ("c_light", self.c_light),
            ("xi", self.xi),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(InvalidConstant { name, value });
            }
        }
        Ok(())
    }

    /// Converts an energy in joules into the associated rate E/ħ in s⁻¹.
    #[inline]
    pub fn rate(&self, energy: f64) -> f64 {
        energy / self.hbar
    }
}
