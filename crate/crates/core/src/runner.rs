//! Replica and ensemble orchestration plus the on-disk artifacts written by
//! the `calibrate`, `run` and `failure` commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calibration::{
    build_table, run_sweep, write_phase_space_csv, CalibrationTable, GammaSource, SweepGrid, SweepPoint,
    CONNECTIVITY_THRESHOLD,
};
use crate::config::{GammaSetting, ScenarioConfig};
use crate::engine::{DynamicsKind, Simulation};
use crate::error::{Result, TopoError};
use crate::failure::FailureSchedule;
use crate::metrics::{ensemble_average, MetricsRecord, MetricsSeries};
use crate::model::{build_network_with, NetworkState};

/// RNG for replica `stream` of a master seed. Streams are independent and
/// replayable.
pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct ReplicaOutput {
    pub series: MetricsSeries,
    pub initial: NetworkState,
    pub final_state: NetworkState,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub replicas: Vec<ReplicaOutput>,
    pub average: MetricsSeries,
}

/// Resolves the configured gamma, loading the calibration table if needed.
pub fn gamma_source(config: &ScenarioConfig) -> Result<GammaSource> {
    match config.gamma {
        GammaSetting::Fixed(g) => Ok(GammaSource::Fixed(g)),
        GammaSetting::Table => {
            let path = config
                .table
                .clone()
                .unwrap_or_else(|| config.output.join("gamma_table.csv"));
            Ok(GammaSource::Table(CalibrationTable::read_csv(&path)?))
        }
    }
}

pub fn run_replica(config: &ScenarioConfig, gamma: &GammaSource, replica: u64) -> Result<ReplicaOutput> {
    config.validate()?;
    let mut rng = replica_rng(config.seed, replica);
    let initial = build_network_with(&config.network_spec(), &mut rng)?;
    let mut sim = Simulation::new(initial.clone(), config.coefficients(), gamma, config.settings()?, rng);
    sim.run(config.steps, config.failure.as_ref());
    let (final_state, series) = sim.into_parts();
    Ok(ReplicaOutput {
        series,
        initial,
        final_state,
    })
}

/// Runs `config.ensembles` replicas in parallel and averages them.
pub fn run_ensemble(config: &ScenarioConfig, gamma: &GammaSource) -> Result<EnsembleOutput> {
    let replicas = (0..config.ensembles as u64)
        .into_par_iter()
        .map(|k| run_replica(config, gamma, k))
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<MetricsSeries> = replicas.iter().map(|r| r.series.clone()).collect();
    let average = ensemble_average(&series)?;
    Ok(EnsembleOutput { replicas, average })
}

/// Single centralized run with a fixed gamma.
pub fn run_centralized(config: &ScenarioConfig, steps: u64, seed: u64) -> Result<MetricsSeries> {
    let mut cfg = config.clone();
    cfg.kind = DynamicsKind::Centralized;
    cfg.steps = steps;
    cfg.seed = seed;
    let gamma = gamma_source(&cfg)?;
    Ok(run_replica(&cfg, &gamma, 0)?.series)
}

/// Ensemble-averaged run of `kind` under a failure schedule.
pub fn failure_run(
    config: &ScenarioConfig,
    schedule: FailureSchedule,
    kind: DynamicsKind,
    gamma: &GammaSource,
) -> Result<MetricsSeries> {
    let mut cfg = config.clone();
    cfg.kind = kind;
    cfg.failure = Some(schedule);
    Ok(run_ensemble(&cfg, gamma)?.average)
}

pub fn write_series_csv(series: &MetricsSeries, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for r in &series.records {
        writer.serialize(r)?;
    }
    writer.flush().map_err(|e| TopoError::io(path, e))?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<MetricsSeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader
        .deserialize::<MetricsRecord>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(MetricsSeries { records })
}

/// Writes `<prefix>_nodes.csv` (`id,x,y[,z],r,T,active`) and
/// `<prefix>_edges.csv` (`i,j`).
pub fn write_snapshot(state: &NetworkState, dir: &Path, prefix: &str) -> Result<(PathBuf, PathBuf)> {
    let nodes_path = dir.join(format!("{prefix}_nodes.csv"));
    let edges_path = dir.join(format!("{prefix}_edges.csv"));
    let axes = state.space.dimension.axes();

    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| TopoError::io(p, e)
    };
    let mut out = BufWriter::new(File::create(&nodes_path).map_err(io(&nodes_path))?);
    let header = if axes == 3 {
        "id,x,y,z,r,T,active"
    } else {
        "id,x,y,r,T,active"
    };
    writeln!(out, "{header}").map_err(io(&nodes_path))?;
    for n in &state.nodes {
        let coords: Vec<String> = n.position[..axes].iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            n.id,
            coords.join(","),
            n.range,
            n.temperature,
            u8::from(n.active)
        )
        .map_err(io(&nodes_path))?;
    }
    out.flush().map_err(io(&nodes_path))?;

    let mut out = BufWriter::new(File::create(&edges_path).map_err(io(&edges_path))?);
    writeln!(out, "i,j").map_err(io(&edges_path))?;
    for (i, j) in state.adjacency.edges() {
        writeln!(out, "{i},{j}").map_err(io(&edges_path))?;
    }
    out.flush().map_err(io(&edges_path))?;
    Ok((nodes_path, edges_path))
}

/// Files produced by a `run`.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config_echo: PathBuf,
    pub ensemble_csv: PathBuf,
    pub replica_csvs: Vec<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub table: Option<PathBuf>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| TopoError::io(dir, e))
}

/// Runs the configured ensemble and writes its CSVs, the config echo and
/// the initial / baseline-end / controlled-end snapshot trio of replica 0.
pub fn execute_run(config: &ScenarioConfig) -> Result<RunArtifact> {
    config.validate()?;
    let gamma = gamma_source(config)?;
    let dir = &config.output;
    ensure_dir(dir)?;

    let config_echo = dir.join("config.txt");
    config.save(&config_echo)?;

    let ensemble = run_ensemble(config, &gamma)?;
    let mut replica_csvs = Vec::new();
    for (k, rep) in ensemble.replicas.iter().enumerate() {
        let path = dir.join(format!("replica_{k}.csv"));
        write_series_csv(&rep.series, &path)?;
        replica_csvs.push(path);
    }
    let ensemble_csv = dir.join("ensemble.csv");
    write_series_csv(&ensemble.average, &ensemble_csv)?;

    let mut companion_cfg = config.clone();
    companion_cfg.baseline = !config.baseline;
    let companion = run_replica(&companion_cfg, &gamma, 0)?;
    let own = &ensemble.replicas[0];
    let (baseline_end, controlled_end) = if config.baseline {
        (&own.final_state, &companion.final_state)
    } else {
        (&companion.final_state, &own.final_state)
    };

    let mut snapshots = Vec::new();
    for (state, prefix) in [
        (&own.initial, "snapshot_initial"),
        (baseline_end, "snapshot_baseline"),
        (controlled_end, "snapshot_controlled"),
    ] {
        let (nodes, edges) = write_snapshot(state, dir, prefix)?;
        snapshots.push(nodes);
        snapshots.push(edges);
    }

    Ok(RunArtifact {
        config_echo,
        ensemble_csv,
        replica_csvs,
        snapshots,
        table: matches!(config.gamma, GammaSetting::Table)
            .then(|| config.table.clone().unwrap_or_else(|| dir.join("gamma_table.csv"))),
    })
}

/// Sweep, table and phase-space export.
#[derive(Debug, Clone)]
pub struct CalibrationArtifact {
    pub points: Vec<SweepPoint>,
    pub table: CalibrationTable,
    pub table_csv: PathBuf,
    pub phase_space_csv: PathBuf,
}

pub fn execute_calibration(grid: &SweepGrid, base: &ScenarioConfig, dir: &Path) -> Result<CalibrationArtifact> {
    grid.validate()?;
    ensure_dir(dir)?;
    let points = run_sweep(grid, base, base.seed)?;
    let phase_space_csv = dir.join("phase_space.csv");
    write_phase_space_csv(&points, &phase_space_csv)?;
    let table = build_table(&points, CONNECTIVITY_THRESHOLD)?;
    let table_csv = dir.join("gamma_table.csv");
    table.write_csv(&table_csv)?;
    Ok(CalibrationArtifact {
        points,
        table,
        table_csv,
        phase_space_csv,
    })
}

/// One ensemble-averaged CSV per failure fraction.
pub fn execute_failure(config: &ScenarioConfig, fractions: &[f64], period: u64) -> Result<Vec<(f64, PathBuf)>> {
    let gamma = gamma_source(config)?;
    let dir = &config.output;
    ensure_dir(dir)?;
    let mut out = Vec::new();
    for &fraction in fractions {
        let mut cfg = config.clone();
        cfg.failure = Some(FailureSchedule::every(period, fraction));
        cfg.validate()?;
        cfg.save(&dir.join(format!("config_failure_{fraction}.txt")))?;
        let series = failure_run(&cfg, FailureSchedule::every(period, fraction), cfg.kind, &gamma)?;
        let path = dir.join(format!("failure_{fraction}.csv"));
        write_series_csv(&series, &path)?;
        out.push((fraction, path));
    }
    Ok(out)
}
