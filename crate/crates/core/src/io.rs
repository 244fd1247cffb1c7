//! Document formats.
//!
//! | file    | shape                                          |
//! |---------|------------------------------------------------|
//! | surface | `{"num_faces": F, "gluing": [[[f,k],[g,j]], ...]}` |
//! | metric  | `{"edge_lengths": [...]}` by canonical edge     |
//! | factors | `{"w": [...]}` by canonical component           |
//! | target  | `{"K_bar": [...]}`, all entries positive        |
//!
//! Flow traces are CSV with one row per sample; every number is written with
//! 17 significant digits so doubles survive a round trip.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::complex::{SurfaceComplex, SurfaceFile};
use crate::conformal::{BackgroundMetric, ConformalFactor, CurvatureVector};
use crate::error::{Error, Result};
use crate::flows::FlowTrajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub edge_lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorFile {
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    #[serde(rename = "K_bar")]
    pub k_bar: Vec<f64>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_surface(text: &str) -> Result<SurfaceComplex> {
    let file: SurfaceFile = serde_json::from_str(text)?;
    SurfaceComplex::try_from(file)
}

pub fn load_surface(path: &Path) -> Result<SurfaceComplex> {
    parse_surface(&fs::read_to_string(path)?)
}

pub fn save_surface(path: &Path, cx: &SurfaceComplex) -> Result<()> {
    write_json(path, &cx.to_file())
}

pub fn load_metric(path: &Path) -> Result<BackgroundMetric> {
    let file: MetricFile = read_json(path)?;
    BackgroundMetric::new(file.edge_lengths)
}

pub fn save_metric(path: &Path, bg: &BackgroundMetric) -> Result<()> {
    write_json(
        path,
        &MetricFile {
            edge_lengths: bg.lengths().to_vec(),
        },
    )
}

pub fn load_factors(path: &Path) -> Result<ConformalFactor> {
    let file: FactorFile = read_json(path)?;
    ConformalFactor::new(file.w)
}

pub fn save_factors(path: &Path, w: &ConformalFactor) -> Result<()> {
    write_json(path, &FactorFile { w: w.0.clone() })
}

/// Loads a target; every entry must be finite and strictly positive.
pub fn load_target(path: &Path) -> Result<CurvatureVector> {
    let file: TargetFile = read_json(path)?;
    CurvatureVector::new(file.k_bar)
}

pub fn save_target(path: &Path, k_bar: &CurvatureVector) -> Result<()> {
    write_json(
        path,
        &TargetFile {
            k_bar: k_bar.0.clone(),
        },
    )
}

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("w_{i}")));
    cols.extend((0..n).map(|i| format!("K_{i}")));
    cols.extend(
        ["calabi_energy", "potential_energy", "boundary_margin", "dt"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn write_trace<W: Write>(out: &mut W, trajectory: &FlowTrajectory) -> Result<()> {
    let n = trajectory.last().w.len();
    writeln!(out, "{}", trace_header(n))?;
    for s in &trajectory.samples {
        let row: Vec<String> = std::iter::once(s.t)
            .chain(s.w.0.iter().copied())
            .chain(s.k.0.iter().copied())
            .chain([s.calabi_energy, s.potential_energy, s.boundary_margin, s.dt])
            .map(format_number)
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_trace(path: &Path, trajectory: &FlowTrajectory) -> Result<()> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trajectory)?;
    fs::write(path, buf).map_err(Error::from)
}
