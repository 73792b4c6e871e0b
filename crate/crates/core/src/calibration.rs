//! Centralized parameter sweep over `(T, rho, gamma)` and the resulting
//! `gamma(T, rho)` table used by distributed nodes.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{GammaSetting, ScenarioConfig};
use crate::engine::DynamicsKind;
use crate::error::{Result, TopoError};
use crate::metrics::mean;
use crate::model::TemperatureSpec;
use crate::runner::run_replica;

/// Normalization used for nearest-bin distances.
pub const TEMPERATURE_SCALE: f64 = 1000.0;
pub const DENSITY_SCALE: f64 = 0.1;

/// Required steady connectivity for a sweep point to qualify.
pub const CONNECTIVITY_THRESHOLD: f64 = 0.95;

/// Fraction of each run averaged for steady-state metrics.
pub const STEADY_FRACTION: f64 = 0.2;

pub const TABLE_VERSION: &str = "# topoctl gamma table v1";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub temperatures: Vec<f64>,
    pub densities: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            temperatures: vec![0.0, 1.0, 10.0, 100.0, 1000.0],
            densities: vec![0.01, 0.025, 0.05, 0.075, 0.1],
            gammas: vec![0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0],
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() || self.densities.is_empty() || self.gammas.is_empty() {
            return Err(TopoError::Config("sweep grid axes must be non-empty".into()));
        }
        if let Some(t) = self.temperatures.iter().find(|t| !(0.0..=1000.0).contains(*t)) {
            return Err(TopoError::Config(format!("temperature {t} outside [0, 1000]")));
        }
        if let Some(r) = self.densities.iter().find(|r| !(**r > 0.0 && **r <= 0.1)) {
            return Err(TopoError::Config(format!("density {r} outside (0, 0.1]")));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(0.0..=100.0).contains(*g)) {
            return Err(TopoError::Config(format!("gamma {g} outside [0, 100]")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &t in &self.temperatures {
            for &rho in &self.densities {
                for &g in &self.gammas {
                    out.push((t, rho, g));
                }
            }
        }
        out
    }
}

/// Steady-state outcome of one sweep run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "rho")]
    pub density: f64,
    pub gamma: f64,
    pub connectivity: f64,
    pub tau: f64,
    pub cost: f64,
    pub range2: f64,
}

/// One centralized run per grid point; point `k` uses RNG stream `k` of `seed`.
pub fn run_sweep(grid: &SweepGrid, base: &ScenarioConfig, seed: u64) -> Result<Vec<SweepPoint>> {
    grid.validate()?;
    grid.points()
        .into_par_iter()
        .enumerate()
        .map(|(k, (t, rho, g))| {
            let mut cfg = base.clone();
            cfg.kind = DynamicsKind::Centralized;
            cfg.baseline = false;
            cfg.temperature = TemperatureSpec::Fixed(t);
            cfg.density = rho;
            cfg.gamma = GammaSetting::Fixed(g);
            cfg.failure = None;
            cfg.seed = seed;
            let out = run_replica(&cfg, &GammaSource::Fixed(g), k as u64)?;
            let tail = out.series.tail(STEADY_FRACTION);
            Ok(SweepPoint {
                temperature: t,
                density: rho,
                gamma: g,
                connectivity: mean(tail.iter().map(|r| r.connectivity)),
                tau: mean(tail.iter().map(|r| r.tau)),
                cost: mean(tail.iter().map(|r| r.cost)),
                range2: mean(tail.iter().map(|r| r.range2_mean)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub temperature: f64,
    pub density: f64,
    pub gamma: f64,
    pub connectivity: f64,
    pub tau: f64,
    /// Bin the value was copied from when this bin had no qualifying point.
    pub inherited_from: Option<(f64, f64)>,
}

/// `gamma(T, rho)` over a rectangular set of bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub entries: Vec<TableEntry>,
}

fn normalized_distance(t1: f64, r1: f64, t2: f64, r2: f64) -> f64 {
    let dt = (t1 - t2) / TEMPERATURE_SCALE;
    let dr = (r1 - r2) / DENSITY_SCALE;
    (dt * dt + dr * dr).sqrt()
}

/// Per `(T, rho)` bin, the qualifying gamma with the highest steady tau
/// (larger gamma on ties). Bins without a qualifying gamma copy the nearest
/// qualifying bin.
pub fn build_table(points: &[SweepPoint], threshold: f64) -> Result<CalibrationTable> {
    if points.is_empty() {
        return Err(TopoError::Config("cannot build a table from zero sweep points".into()));
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if !bins.iter().any(|&(t, r)| t == p.temperature && r == p.density) {
            bins.push((p.temperature, p.density));
        }
    }
    bins.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let best: Vec<Option<&SweepPoint>> = bins
        .iter()
        .map(|&(t, r)| {
            points
                .iter()
                .filter(|p| p.temperature == t && p.density == r && p.connectivity >= threshold)
                .max_by(|a, b| a.tau.total_cmp(&b.tau).then(a.gamma.total_cmp(&b.gamma)))
        })
        .collect();

    if best.iter().all(Option::is_none) {
        return Err(TopoError::CalibrationFailure { threshold });
    }

    let entries = bins
        .iter()
        .zip(&best)
        .map(|(&(t, r), chosen)| match chosen {
            Some(p) => TableEntry {
                temperature: t,
                density: r,
                gamma: p.gamma,
                connectivity: p.connectivity,
                tau: p.tau,
                inherited_from: None,
            },
            None => {
                let (src_bin, src) = bins
                    .iter()
                    .zip(&best)
                    .filter_map(|(bin, b)| b.map(|p| (*bin, p)))
                    .min_by(|(a, _), (b, _)| {
                        normalized_distance(t, r, a.0, a.1).total_cmp(&normalized_distance(t, r, b.0, b.1))
                    })
                    .expect("at least one qualifying bin");
                TableEntry {
                    temperature: t,
                    density: r,
                    gamma: src.gamma,
                    connectivity: src.connectivity,
                    tau: src.tau,
                    inherited_from: Some(src_bin),
                }
            }
        })
        .collect();
    Ok(CalibrationTable { entries })
}

/// Nearest-bin lookup in normalized `(T / 1000, rho / 0.1)` space. Total.
pub fn lookup_gamma(table: &CalibrationTable, temperature: f64, density: f64) -> f64 {
    table
        .entries
        .iter()
        .min_by(|a, b| {
            normalized_distance(temperature, density, a.temperature, a.density).total_cmp(&normalized_distance(
                temperature,
                density,
                b.temperature,
                b.density,
            ))
        })
        .map(|e| e.gamma)
        .expect("tables are never empty")
}

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    #[serde(rename = "T_bin")]
    t_bin: f64,
    rho_bin: f64,
    gamma: f64,
    connectivity: f64,
    tau: f64,
}

impl CalibrationTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| TopoError::io(path, e))?;
        writeln!(file, "{TABLE_VERSION}").map_err(|e| TopoError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        for e in &self.entries {
            writer.serialize(TableRow {
                t_bin: e.temperature,
                rho_bin: e.density,
                gamma: e.gamma,
                connectivity: e.connectivity,
                tau: e.tau,
            })?;
        }
        writer.flush().map_err(|e| TopoError::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(TopoError::MissingTable(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| TopoError::io(path, e))?;
        let mut lines = text.splitn(2, '\n');
        let version = lines.next().unwrap_or_default().trim_end();
        if version != TABLE_VERSION {
            return Err(TopoError::Parse {
                what: "gamma table",
                detail: format!("unsupported version line {version:?}"),
            });
        }
        let body = lines.next().unwrap_or_default();
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let entries = reader
            .deserialize::<TableRow>()
            .map(|row| {
                let row = row?;
                Ok(TableEntry {
                    temperature: row.t_bin,
                    density: row.rho_bin,
                    gamma: row.gamma,
                    connectivity: row.connectivity,
                    tau: row.tau,
                    inherited_from: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(TopoError::Parse {
                what: "gamma table",
                detail: "no rows".into(),
            });
        }
        Ok(CalibrationTable { entries })
    }
}

/// Writes `T,rho,gamma,connectivity,tau,cost,range2`, one row per sweep point.
pub fn write_phase_space_csv(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for p in points {
        writer.serialize(p)?;
    }
    writer.flush().map_err(|e| TopoError::io(path, e))?;
    Ok(())
}

pub fn read_phase_space_csv(path: &Path) -> Result<Vec<SweepPoint>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader
        .deserialize::<SweepPoint>()
        .map(|r| r.map_err(TopoError::from))
        .collect()
}

/// Where a node's range coefficient comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSource {
    Fixed(f64),
    Table(CalibrationTable),
}

impl GammaSource {
    pub fn gamma_for(&self, temperature: f64, density: f64) -> f64 {
        match self {
            GammaSource::Fixed(g) => *g,
            GammaSource::Table(table) => lookup_gamma(table, temperature, density),
        }
    }
}
