use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use reductionlab_core::massdist::{pair_eg_detailed, sphere_pair_eg};
use reductionlab_core::{MassDistribution, PhysicalConstants, QuadratureConfig, SingularityScheme, Vec3};

use crate::error::CliError;
use crate::read_text;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scheme {
    CellAverage,
    OffsetMidpoint,
}

#[derive(Debug, Args)]
pub struct EgArgs {
    /// Distribution of the first state (JSON).
    pub a: PathBuf,
    /// Distribution of the second state (JSON).
    pub b: PathBuf,
    /// Relative tolerance between successive refinement levels.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Nodes per smallest feature at the coarsest level.
    #[arg(long, default_value_t = 8)]
    pub grid_resolution: usize,
    #[arg(long, default_value_t = 5)]
    pub max_refinements: usize,
    /// Treatment of coincident grid cells.
    #[arg(long, value_enum, default_value_t = Scheme::CellAverage)]
    pub scheme: Scheme,
}

fn load(path: &Path) -> Result<MassDistribution, CliError> {
    let text = read_text(path)?;
    let dist: MassDistribution =
        serde_json::from_str(&text).map_err(|e| CliError::json(&path.display().to_string(), &e))?;
    dist.validate()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(dist)
}

/// Mass, diameter and centre of a (possibly displaced) uniform sphere.
fn as_sphere(d: &MassDistribution) -> Option<(f64, f64, Vec3)> {
    match d {
        MassDistribution::UniformSphere { mass, diameter, center } => Some((*mass, *diameter, *center)),
        MassDistribution::Displaced { base, offset } => as_sphere(base).map(|(m, dia, c)| (m, dia, c + offset)),
        _ => None,
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn line(out: &mut dyn Write, key: &str, value: String) -> std::io::Result<()> {
    writeln!(out, "{key:<14} {value}")
}

pub fn cmd_eg(args: &EgArgs, consts: &PhysicalConstants, out: &mut dyn Write) -> Result<(), CliError> {
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let cfg = QuadratureConfig {
        grid_resolution: args.grid_resolution,
        singularity_scheme: match args.scheme {
            Scheme::CellAverage => SingularityScheme::CellAverage,
            Scheme::OffsetMidpoint => SingularityScheme::OffsetMidpoint,
        },
        rel_tolerance: args.tolerance,
        max_refinements: args.max_refinements,
    };
    let est = pair_eg_detailed(&a, &b, &cfg, consts)?;
    line(out, "E_G", format!("{:e} J", est.energy))?;
    line(out, "rate", format!("{:e} s⁻¹", consts.rate(est.energy)))?;
    line(out, "refinements", est.refinements.to_string())?;
    line(out, "xi", consts.xi.to_string())?;
    if let Some((m1, m2)) = est.mass_mismatch {
        line(out, "warning", format!("total masses differ: {m1:e} kg vs {m2:e} kg"))?;
    }
    if let (Some((m1, d1, c1)), Some((m2, d2, c2))) = (as_sphere(&a), as_sphere(&b)) {
        if same(m1, m2) && same(d1, d2) {
            let analytic = sphere_pair_eg(m1, d1, (c1 - c2).norm(), consts)?;
            line(out, "analytic E_G", format!("{analytic:e} J"))?;
            line(out, "analytic rate", format!("{:e} s⁻¹", consts.rate(analytic)))?;
            if analytic > 0.0 {
                line(out, "relative diff", format!("{:e}", (est.energy - analytic).abs() / analytic))?;
            }
        }
    }
    Ok(())
}
