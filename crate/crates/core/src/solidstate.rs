//! Order-of-magnitude estimates for superposed solids, fluid droplets and
//! the mass displacements inside a single-photon detector.
//!
//! A displaced solid has two regimes. Below the thermal extension of a
//! nucleus the coupling grows quadratically with the displacement; above
//! it every nucleus is separated from its copy and the coupling saturates
//! at `N · (12/5) G m² / d`. A macroscopic term from the body's outline
//! adds on top and takes over for large displacements.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{PhysicalConstants, ELECTRON_MASS, ELEMENTARY_CHARGE, PLANCK_H, VACUUM_PERMITTIVITY};

/// Default prefactor of the small-displacement law.
pub const DEFAULT_ALPHA: f64 = 5.0;
/// Default shape factor of the macroscopic law for a long rod.
pub const DEFAULT_ROD_BETA: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolidStateError {
    #[error("invalid parameter `{name}`: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("displacement samples must be sorted ascending (index {index})")]
    UnsortedSamples { index: usize },
}

fn positive(name: &'static str, value: f64) -> Result<(), SolidStateError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SolidStateError::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), SolidStateError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(SolidStateError::InvalidParameter {
            name,
            value,
            reason: "must be finite and non-negative",
        })
    }
}

/// Bulk and lattice properties of a material, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub nucleus_mass: f64,
    pub lattice_constant: f64,
    pub phonon_velocity: f64,
    pub bulk_density: f64,
    /// Linear thermal expansion coefficient, 1/K.
    pub thermal_expansion: f64,
    /// J/(kg K).
    pub specific_heat: f64,
    /// N/m².
    pub compression_modulus: f64,
    pub relative_permittivity: f64,
}

static PRESETS: OnceLock<BTreeMap<String, Material>> = OnceLock::new();

impl Material {
    /// Named presets shipped in `data/materials.json`: `iron`, `water`,
    /// `sio2`, `cu`.
    pub fn presets() -> &'static BTreeMap<String, Material> {
        PRESETS.get_or_init(|| {
            serde_json::from_str(include_str!("../data/materials.json")).expect("bundled material table is valid")
        })
    }

    pub fn preset(name: &str) -> Result<Material, SolidStateError> {
        Self::presets()
            .get(&name.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| SolidStateError::UnknownMaterial(name.to_string()))
    }

    pub fn iron() -> Material {
        Self::preset("iron").expect("iron preset")
    }

    pub fn water() -> Material {
        Self::preset("water").expect("water preset")
    }

    pub fn sio2() -> Material {
        Self::preset("sio2").expect("sio2 preset")
    }

    pub fn copper() -> Material {
        Self::preset("cu").expect("cu preset")
    }

    pub fn validate(&self) -> Result<(), SolidStateError> {
        positive("nucleus_mass", self.nucleus_mass)?;
        positive("lattice_constant", self.lattice_constant)?;
        positive("phonon_velocity", self.phonon_velocity)?;
        positive("bulk_density", self.bulk_density)?;
        positive("thermal_expansion", self.thermal_expansion)?;
        positive("specific_heat", self.specific_heat)?;
        positive("compression_modulus", self.compression_modulus)?;
        positive("relative_permittivity", self.relative_permittivity)
    }
}

/// Thermal extension of a nucleus, `√(2kT/m) · l / v`: the distance a
/// nucleus moving at thermal speed covers in one acoustic period of the
/// lattice.
pub fn nucleus_extension(mat: &Material, temperature: f64, consts: &PhysicalConstants) -> f64 {
    (2.0 * consts.k_boltzmann * temperature / mat.nucleus_mass).sqrt() * mat.lattice_constant / mat.phonon_velocity
}

/// Coupling of one nucleus with its fully separated copy,
/// `ξ (12/5) G m² / d_nucl`.
pub fn nucleus_eg(mat: &Material, temperature: f64, consts: &PhysicalConstants) -> f64 {
    let d = nucleus_extension(mat, temperature, consts);
    consts.xi * 12.0 / 5.0 * consts.g * mat.nucleus_mass * mat.nucleus_mass / d
}

/// Saturated coupling of a solid of `mass` displaced by more than the
/// nucleus extension. Infinite at zero temperature, where the extension
/// vanishes.
pub fn solid_plateau_eg(mass: f64, mat: &Material, temperature: f64, consts: &PhysicalConstants) -> f64 {
    mass / mat.nucleus_mass * nucleus_eg(mat, temperature, consts)
}

/// Quadratic small-displacement law `α · plateau · (Δx / d_nucl)²`.
///
/// Intended for `Δx ≪ d_nucl`; see [`in_small_displacement_regime`].
pub fn solid_small_displacement_eg(
    mass: f64,
    mat: &Material,
    temperature: f64,
    dx: f64,
    alpha: f64,
    consts: &PhysicalConstants,
) -> f64 {
    let d = nucleus_extension(mat, temperature, consts);
    alpha * solid_plateau_eg(mass, mat, temperature, consts) * (dx / d).powi(2)
}

/// Whether `dx` is below a tenth of the nucleus extension.
pub fn in_small_displacement_regime(mat: &Material, temperature: f64, dx: f64, consts: &PhysicalConstants) -> bool {
    dx <= 0.1 * nucleus_extension(mat, temperature, consts)
}

/// Macroscopic coupling from the displaced outline of a body,
/// `ξ β G d³ ρ² Δx²`.
pub fn rod_macroscopic_eg(rod_diameter: f64, density: f64, dx: f64, beta: f64, consts: &PhysicalConstants) -> f64 {
    consts.xi * beta * consts.g * rod_diameter.powi(3) * density * density * dx * dx
}

/// Outline of the displaced body for the macroscopic term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MacroGeometry {
    /// Long rod displaced along its axis.
    Rod { diameter: f64, beta: f64 },
    /// Thin disc (thickness ≪ diameter). No default shape factor exists;
    /// `beta` must be supplied and is expected well below the rod value.
    Disc { diameter: f64, beta: f64 },
}

impl MacroGeometry {
    pub fn rod(diameter: f64) -> Self {
        Self::Rod {
            diameter,
            beta: DEFAULT_ROD_BETA,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Self::Rod { diameter, .. } | Self::Disc { diameter, .. } => diameter,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Rod { beta, .. } | Self::Disc { beta, .. } => beta,
        }
    }

    pub fn eg(&self, density: f64, dx: f64, consts: &PhysicalConstants) -> f64 {
        rod_macroscopic_eg(self.diameter(), density, dx, self.beta(), consts)
    }
}

/// Coupling of a displaced solid as a function of the displacement:
/// `min(α-law, plateau) + macroscopic term`.
///
/// The macroscopic term is added at every displacement so that the curve
/// stays continuous; below the nucleus extension it is many orders of
/// magnitude smaller than the microscopic part.
pub fn solid_eg_curve(
    mass: f64,
    mat: &Material,
    temperature: f64,
    geometry: &MacroGeometry,
    dx_samples: &[f64],
    consts: &PhysicalConstants,
) -> Result<Vec<(f64, f64)>, SolidStateError> {
    positive("mass", mass)?;
    positive("temperature", temperature)?;
    mat.validate()?;
    for (i, &dx) in dx_samples.iter().enumerate() {
        non_negative("dx", dx)?;
        if i > 0 && dx < dx_samples[i - 1] {
            return Err(SolidStateError::UnsortedSamples { index: i });
        }
    }
    let plateau = solid_plateau_eg(mass, mat, temperature, consts);
    Ok(dx_samples
        .iter()
        .map(|&dx| {
            let micro = solid_small_displacement_eg(mass, mat, temperature, dx, DEFAULT_ALPHA, consts).min(plateau);
            (dx, micro + geometry.eg(mat.bulk_density, dx, consts))
        })
        .collect())
}

/// Displacement at which the macroscopic term equals the plateau.
pub fn macroscopic_crossover(
    mass: f64,
    mat: &Material,
    temperature: f64,
    geometry: &MacroGeometry,
    consts: &PhysicalConstants,
) -> f64 {
    let plateau = solid_plateau_eg(mass, mat, temperature, consts);
    (plateau / geometry.eg(mat.bulk_density, 1.0, consts)).sqrt()
}

/// Lifetime `ħ / E` of a fluid sphere superposed with a far-separated copy
/// of itself, where `E = ξ (12/5) G m² / diameter`.
pub fn fluid_sphere_lifetime(diameter: f64, density: f64, consts: &PhysicalConstants) -> f64 {
    let mass = PI / 6.0 * diameter.powi(3) * density;
    let eg = consts.xi * 12.0 / 5.0 * consts.g * mass * mass / diameter;
    consts.hbar / eg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacitor {
    pub radius: f64,
    pub plate_gap: f64,
    pub dielectric: Material,
    /// Thickness of the plate moved by the dielectric compression.
    pub plate_thickness: f64,
    pub plate_material: Material,
}

impl Capacitor {
    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn capacitance(&self) -> f64 {
        self.dielectric.relative_permittivity * VACUUM_PERMITTIVITY * self.area() / self.plate_gap
    }

    pub fn plate_mass(&self) -> f64 {
        self.area() * self.plate_thickness * self.plate_material.bulk_density
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resistor {
    pub length: f64,
    pub diameter: f64,
    pub material: Material,
}

impl Resistor {
    pub fn mass(&self) -> f64 {
        PI / 4.0 * self.diameter * self.diameter * self.length * self.material.bulk_density
    }
}

/// Bias voltage before and after the avalanche, volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageDrop {
    pub from: f64,
    pub to: f64,
}

/// Avalanche photodiode read-out whose recording should leave the mass
/// distribution unchanged, plus the macroscopic mass a changing detector
/// would shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub capacitor: Capacitor,
    pub resistor: Resistor,
    pub voltage_drop: VoltageDrop,
    pub piezo_displacement: f64,
    pub shifted_mass: f64,
    pub shifted_mass_material: Material,
    pub temperature: f64,
    pub photon_wavelength: f64,
    /// Time over which the photon's momentum displaces the shifted mass.
    pub observation_time: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            capacitor: Capacitor {
                radius: 0.05,
                plate_gap: 1e-4,
                dielectric: Material::sio2(),
                plate_thickness: 1e-4,
                plate_material: Material::copper(),
            },
            resistor: Resistor {
                length: 0.1,
                diameter: 3e-3,
                material: Material::copper(),
            },
            voltage_drop: VoltageDrop { from: 36.0, to: 29.0 },
            piezo_displacement: 1e-9,
            shifted_mass: 0.1,
            shifted_mass_material: Material::iron(),
            temperature: 300.0,
            photon_wavelength: 1.3e-6,
            observation_time: 1.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), SolidStateError> {
        positive("capacitor.radius", self.capacitor.radius)?;
        positive("capacitor.plate_gap", self.capacitor.plate_gap)?;
        positive("capacitor.plate_thickness", self.capacitor.plate_thickness)?;
        self.capacitor.dielectric.validate()?;
        self.capacitor.plate_material.validate()?;
        positive("resistor.length", self.resistor.length)?;
        positive("resistor.diameter", self.resistor.diameter)?;
        self.resistor.material.validate()?;
        non_negative("voltage_drop.to", self.voltage_drop.to)?;
        if !(self.voltage_drop.from.is_finite() && self.voltage_drop.from >= self.voltage_drop.to) {
            return Err(SolidStateError::InvalidParameter {
                name: "voltage_drop.from",
                value: self.voltage_drop.from,
                reason: "must be finite and not below voltage_drop.to",
            });
        }
        non_negative("piezo_displacement", self.piezo_displacement)?;
        positive("shifted_mass", self.shifted_mass)?;
        self.shifted_mass_material.validate()?;
        positive("temperature", self.temperature)?;
        positive("photon_wavelength", self.photon_wavelength)?;
        non_negative("observation_time", self.observation_time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorEffect {
    DielectricCompression,
    ElectronTransfer,
    ResistorHeating,
    PhotonImpetus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub effect: DetectorEffect,
    /// Characteristic displacement in m (for electron transfer: the plate
    /// gap over which the charge moves).
    pub displacement: f64,
    pub eg: f64,
    pub rate: f64,
}

/// Displacement coupling of a component of `mass`, capped at its plateau.
fn component_eg(mass: f64, mat: &Material, temperature: f64, dx: f64, consts: &PhysicalConstants) -> f64 {
    solid_small_displacement_eg(mass, mat, temperature, dx, DEFAULT_ALPHA, consts)
        .min(solid_plateau_eg(mass, mat, temperature, consts))
}

/// Couplings from the four ways a recording detector still shifts mass.
///
/// 1. The field change relaxes the electrostatic pressure on the
///    dielectric, `Δp = εε₀(V₁² − V₂²)/(2 gap²)`, compressing it by
///    `Δp/K · gap` and moving one plate.
/// 2. The transferred charge `C ΔV` changes the electron mass on the
///    plates; two opposite sheets of `Δm` over the gap couple as
///    `4πG Δm² gap / A`.
/// 3. The released energy `C(V₁² − V₂²)/2` heats the resistor, which
///    lengthens by `α_th ΔT l`.
/// 4. The absorbed photon's momentum `h/λ` moves the shifted mass by
///    `h t / (λ M)` over the observation time.
///
/// Displacements 1, 3 and 4 enter the quadratic solid law with the nucleus
/// count of the moving component only.
pub fn detector_budget(p: &DetectorParams, consts: &PhysicalConstants) -> Result<Vec<BudgetEntry>, SolidStateError> {
    p.validate()?;
    let t = p.temperature;
    let cap = &p.capacitor;
    let v_sq = p.voltage_drop.from.powi(2) - p.voltage_drop.to.powi(2);
    let dv = p.voltage_drop.from - p.voltage_drop.to;
    let entry = |effect, displacement: f64, eg: f64| BudgetEntry {
        effect,
        displacement,
        eg,
        rate: consts.rate(eg),
    };

    let eps = cap.dielectric.relative_permittivity * VACUUM_PERMITTIVITY;
    let pressure = eps * v_sq / (2.0 * cap.plate_gap * cap.plate_gap);
    let compression = pressure / cap.dielectric.compression_modulus * cap.plate_gap;
    let compression_eg = component_eg(cap.plate_mass(), &cap.plate_material, t, compression, consts);

    let electron_mass = cap.capacitance() * dv / ELEMENTARY_CHARGE * ELECTRON_MASS;
    let electron_eg = consts.xi * 4.0 * PI * consts.g * electron_mass * electron_mass * cap.plate_gap / cap.area();

    let heat = 0.5 * cap.capacitance() * v_sq;
    let wire = &p.resistor;
    let warming = heat / (wire.mass() * wire.material.specific_heat);
    let elongation = wire.material.thermal_expansion * warming * wire.length;
    let heating_eg = component_eg(wire.mass(), &wire.material, t, elongation, consts);

    let recoil = PLANCK_H / (p.photon_wavelength * p.shifted_mass) * p.observation_time;
    let impetus_eg = component_eg(p.shifted_mass, &p.shifted_mass_material, t, recoil, consts);

    Ok(vec![
        entry(DetectorEffect::DielectricCompression, compression, compression_eg),
        entry(DetectorEffect::ElectronTransfer, cap.plate_gap, electron_eg),
        entry(DetectorEffect::ResistorHeating, elongation, heating_eg),
        entry(DetectorEffect::PhotonImpetus, recoil, impetus_eg),
    ])
}

/// Coupling of a detector that records by moving `shifted_mass` through
/// `piezo_displacement`.
pub fn changing_detector_eg(p: &DetectorParams, consts: &PhysicalConstants) -> Result<f64, SolidStateError> {
    p.validate()?;
    Ok(component_eg(
        p.shifted_mass,
        &p.shifted_mass_material,
        p.temperature,
        p.piezo_displacement,
        consts,
    ))
}
