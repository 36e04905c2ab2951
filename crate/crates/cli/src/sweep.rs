use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use reductionlab_core::reduction::cascade_distribution;
use reductionlab_core::scenarios::{build_fig3b, delayed_detector_sweep};
use reductionlab_core::solidstate::{macroscopic_crossover, solid_eg_curve, solid_plateau_eg, MacroGeometry};
use reductionlab_core::{CouplingProfile, Material, PhysicalConstants};

use crate::emit;
use crate::error::CliError;
use crate::report::fmt_float;
use crate::svg::{Plot, Series};

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(subcommand)]
    pub kind: SweepKind,
}

#[derive(Debug, Args)]
pub struct SweepOutput {
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG line plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Range {
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    pub log: bool,
}

impl Range {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.steps < 2 || !(self.from.is_finite() && self.to.is_finite()) || self.to <= self.from {
            return Err(CliError::Schema(format!(
                "range needs from < to and at least 2 steps (got {}..{} in {})",
                self.from, self.to, self.steps
            )));
        }
        if self.log && self.from <= 0.0 {
            return Err(CliError::Schema("logarithmic range needs from > 0".into()));
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|k| {
                let f = k as f64 / last;
                if self.log {
                    (self.from.ln() + f * (self.to.ln() - self.from.ln())).exp()
                } else {
                    self.from + f * (self.to - self.from)
                }
            })
            .collect())
    }
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// Coupling of a displaced solid rod against the displacement.
    SolidEg {
        #[arg(long, default_value = "iron")]
        material: String,
        /// Mass in kg.
        #[arg(long, default_value_t = 0.1)]
        mass: f64,
        /// Temperature in K.
        #[arg(long, default_value_t = 300.0)]
        temperature: f64,
        /// Rod diameter in m.
        #[arg(long, default_value_t = 0.01)]
        rod_diameter: f64,
        /// Displacements in m.
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        output: SweepOutput,
    },
    /// p({1}) of the single-changing-detector setup against the delay
    /// after which the other detectors start changing.
    Delayed {
        #[arg(long, default_value_t = 4)]
        n_detectors: usize,
        /// Coupling of the changing detector in J; defaults to ħ, so that
        /// times are in units of its inverse rate.
        #[arg(long)]
        e_plateau: Option<f64>,
        /// Ramp duration of the delayed detectors in s.
        #[arg(long, default_value_t = 0.0)]
        rise: f64,
        /// Delays in s.
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        output: SweepOutput,
    },
    /// p({1}) of the single-changing-detector setup against the number of
    /// detectors.
    Fig3bN {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
        values: Vec<usize>,
        #[arg(long)]
        e_plateau: Option<f64>,
        #[command(flatten)]
        output: SweepOutput,
    },
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&v| fmt_float(v)))?;
        }
        w.into_inner().map_err(|e| CliError::Other(e.to_string()))
    }

    fn column(&self, x: usize, y: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r[x], r[y])).collect()
    }
}

fn series(label: &str, points: Vec<(f64, f64)>, dashed: bool) -> Series {
    Series {
        label: label.into(),
        points,
        dashed,
    }
}

pub fn cmd_sweep(
    args: &SweepArgs,
    consts: &PhysicalConstants,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let (table, plot, output) = match &args.kind {
        SweepKind::SolidEg {
            material,
            mass,
            temperature,
            rod_diameter,
            range,
            output,
        } => {
            let mat = Material::preset(material)?;
            let rod = MacroGeometry::rod(*rod_diameter);
            let xs = range.values()?;
            let curve = solid_eg_curve(*mass, &mat, *temperature, &rod, &xs, consts)?;
            let plateau = solid_plateau_eg(*mass, &mat, *temperature, consts);
            writeln!(
                err,
                "plateau {plateau:e} J ({:e} s⁻¹), macroscopic crossover {:e} m",
                consts.rate(plateau),
                macroscopic_crossover(*mass, &mat, *temperature, &rod, consts)
            )?;
            let table = Table {
                header: vec!["dx", "eg", "rate"],
                rows: curve.iter().map(|&(x, e)| vec![x, e, consts.rate(e)]).collect(),
            };
            let plot = Plot {
                title: format!("{mass} kg {material} rod, {temperature} K"),
                x_label: "displacement (m)".into(),
                y_label: "rate (1/s)".into(),
                x_log: range.log,
                y_log: true,
                series: vec![series("E_G / ħ", table.column(0, 2), false)],
            };
            (table, plot, output)
        }
        SweepKind::Delayed {
            n_detectors,
            e_plateau,
            rise,
            range,
            output,
        } => {
            let e = e_plateau.unwrap_or(consts.hbar);
            let base = build_fig3b(*n_detectors, e, CouplingProfile::Constant)?;
            let sweep = delayed_detector_sweep(&base, &range.values()?, *rise, consts)?;
            match sweep.fitted_lifetime {
                Some(tau) => writeln!(err, "fitted lifetime {tau:e} s")?,
                None => writeln!(err, "too few points inside the transition to fit a lifetime")?,
            }
            let n = *n_detectors as f64;
            let table = Table {
                header: vec!["delta_t", "probability"],
                rows: sweep.points.iter().map(|&(t, p)| vec![t, p]).collect(),
            };
            let flat = |v: f64| table.rows.iter().map(|r| (r[0], v)).collect();
            let plot = Plot {
                title: format!("delayed detectors, n = {n_detectors}"),
                x_label: "delay (s)".into(),
                y_label: "p({1})".into(),
                x_log: range.log,
                y_log: false,
                series: vec![
                    series("model", table.column(0, 1), false),
                    series("projection 1/n", flat(1.0 / n), true),
                    series("1/2", flat(0.5), true),
                ],
            };
            (table, plot, output)
        }
        SweepKind::Fig3bN {
            values,
            e_plateau,
            output,
        } => {
            let e = e_plateau.unwrap_or(consts.hbar);
            let mut rows = Vec::with_capacity(values.len());
            for &n in values {
                let sc = build_fig3b(n, e, CouplingProfile::Constant)?;
                let dist = cascade_distribution(&sc.superposition, &sc.profiles, consts)?;
                rows.push(vec![n as f64, dist.get(&[0]), 1.0 / n as f64]);
            }
            let table = Table {
                header: vec!["n", "probability", "projection"],
                rows,
            };
            let plot = Plot {
                title: "single changing detector".into(),
                x_label: "number of detectors".into(),
                y_label: "p({1})".into(),
                x_log: true,
                y_log: false,
                series: vec![
                    series("model", table.column(0, 1), false),
                    series("projection postulate", table.column(0, 2), true),
                ],
            };
            (table, plot, output)
        }
    };
    emit(output.out.as_deref(), &table.csv()?, out)?;
    if let Some(path) = &output.svg {
        emit(Some(path), plot.render().as_bytes(), out)?;
    }
    Ok(())
}
