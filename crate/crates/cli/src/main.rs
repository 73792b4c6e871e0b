//! `topoctl`: calibrate, run and failure-test self-organizing topologies.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use topoctl::calibration::SweepGrid;
use topoctl::config::parse_temperature;
use topoctl::failure::FailureSchedule;
use topoctl::metrics::{mean, MetricsSeries};
use topoctl::model::Dimension;
use topoctl::runner::{execute_calibration, execute_failure, execute_run, read_series_csv};
use topoctl::{DynamicsKind, GammaSetting, ScenarioConfig, TopoError};

const OUTPUT_ENV: &str = "TOPOCTL_OUTPUT";

#[derive(Debug, Parser)]
#[command(
    name = "topoctl",
    version,
    about = "Hamiltonian topology control for ad hoc networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep (T, rho, gamma) and write gamma_table.csv and phase_space.csv.
    Calibrate(CalibrateArgs),
    /// Run an ensemble and write per-replica, ensemble and snapshot CSVs.
    Run(ScenarioArgs),
    /// One ensemble-averaged failure run per fraction.
    Failure(FailureArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// key=value config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// centralized, adhoc or mobile.
    #[arg(long)]
    kind: Option<DynamicsKind>,
    #[arg(long, value_name = "2|3")]
    dim: Option<usize>,
    #[arg(long = "nodes", short = 'n')]
    nodes: Option<usize>,
    /// Node density.
    #[arg(long)]
    rho: Option<f64>,
    /// Temperature: a value, or uniform:LOW:HIGH per node.
    #[arg(long = "T", value_name = "T")]
    temperature: Option<String>,
    /// Range coefficient, or `table` for the calibrated table.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    ensembles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Accept every move.
    #[arg(long)]
    baseline: bool,
    #[arg(long = "v-max")]
    v_max: Option<f64>,
    /// Calibration table (default: <output>/gamma_table.csv).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, short = 'o', env = OUTPUT_ENV)]
    output: Option<PathBuf>,
    /// Initial mean range, fraction of the side length.
    #[arg(long = "base-range")]
    base_range: Option<f64>,
    /// Range proposal deviation, fraction of the side length.
    #[arg(long = "range-step")]
    range_step: Option<f64>,
    /// Density scan radius, fraction of the side length.
    #[arg(long = "scan-radius")]
    scan_radius: Option<f64>,
    #[arg(long = "failure-fraction")]
    failure_fraction: Option<f64>,
    #[arg(long = "failure-period")]
    failure_period: Option<u64>,
}

#[derive(Debug, Args)]
struct FailureArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated failure fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = FailureSchedule::DEFAULT_PERIOD)]
    period: u64,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Temperatures to sweep.
    #[arg(long = "T", value_name = "T", value_delimiter = ',')]
    temperatures: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long = "nodes", short = 'n')]
    nodes: Option<usize>,
    #[arg(long, value_name = "2|3")]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "range-step")]
    range_step: Option<f64>,
    #[arg(long, short = 'o', env = OUTPUT_ENV)]
    output: Option<PathBuf>,
}

impl ScenarioArgs {
    fn into_config(self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => match self.kind.unwrap_or(DynamicsKind::Centralized) {
                DynamicsKind::Centralized => ScenarioConfig::centralized(),
                DynamicsKind::AdHoc => ScenarioConfig::adhoc(),
                DynamicsKind::Mobile => ScenarioConfig::mobile(),
            },
        };
        if let Some(k) = self.kind {
            cfg.kind = k;
        }
        if let Some(d) = self.dim {
            cfg.dimension = Dimension::from_axes(d)?;
        }
        set(&mut cfg.nodes, self.nodes);
        set(&mut cfg.density, self.rho);
        if let Some(t) = &self.temperature {
            cfg.temperature = parse_temperature(t)?;
        }
        if let Some(g) = &self.gamma {
            cfg.gamma = if g == "table" {
                GammaSetting::Table
            } else {
                GammaSetting::Fixed(
                    g.parse()
                        .map_err(|_| TopoError::Config(format!("gamma must be a number or `table`, got {g:?}")))?,
                )
            };
        }
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.beta, self.beta);
        set(&mut cfg.lambda, self.lambda);
        set(&mut cfg.steps, self.steps);
        set(&mut cfg.ensembles, self.ensembles);
        set(&mut cfg.seed, self.seed);
        cfg.baseline |= self.baseline;
        set(&mut cfg.v_max, self.v_max);
        if self.table.is_some() {
            cfg.table = self.table;
        }
        set(&mut cfg.output, self.output);
        set(&mut cfg.base_range_fraction, self.base_range);
        set(&mut cfg.range_step_fraction, self.range_step);
        set(&mut cfg.scan_radius_fraction, self.scan_radius);
        if let Some(f) = self.failure_fraction {
            let period = self.failure_period.unwrap_or(FailureSchedule::DEFAULT_PERIOD);
            cfg.failure = Some(FailureSchedule::every(period, f));
        } else if let (Some(p), Some(f)) = (self.failure_period, cfg.failure.as_mut()) {
            f.period = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn summarize(label: &str, series: &MetricsSeries) {
    let tail = series.tail(0.2);
    println!(
        "{label}: steady connectivity {:.4}, range2 {:.4}, tau {:.4}, first sustained 0.95 at {}",
        mean(tail.iter().map(|r| r.connectivity)),
        mean(tail.iter().map(|r| r.range2_mean)),
        mean(tail.iter().map(|r| r.tau)),
        series
            .first_sustained_step(0.95, 500)
            .map_or_else(|| "never".to_string(), |s| s.to_string()),
    );
}

fn calibrate(args: CalibrateArgs) -> anyhow::Result<()> {
    let defaults = SweepGrid::default();
    let grid = SweepGrid {
        temperatures: args.temperatures.unwrap_or(defaults.temperatures),
        densities: args.rho.unwrap_or(defaults.densities),
        gammas: args.gamma.unwrap_or(defaults.gammas),
    };
    let mut base = ScenarioConfig::centralized();
    set(&mut base.steps, args.steps);
    set(&mut base.nodes, args.nodes);
    set(&mut base.seed, args.seed);
    set(&mut base.range_step_fraction, args.range_step);
    if let Some(d) = args.dim {
        base.dimension = Dimension::from_axes(d)?;
    }
    set(&mut base.output, args.output);
    base.validate()?;
    let out = execute_calibration(&grid, &base, &base.output)?;
    println!("{} sweep points -> {}", out.points.len(), out.phase_space_csv.display());
    println!("{} table bins -> {}", out.table.entries.len(), out.table_csv.display());
    Ok(())
}

fn run(args: ScenarioArgs) -> anyhow::Result<()> {
    let cfg = args.into_config()?;
    let art = execute_run(&cfg)?;
    println!("config echo -> {}", art.config_echo.display());
    println!("ensemble -> {}", art.ensemble_csv.display());
    println!(
        "{} replica CSVs, {} snapshot files",
        art.replica_csvs.len(),
        art.snapshots.len()
    );
    if let Some(t) = &art.table {
        println!("table <- {}", t.display());
    }
    summarize(
        &format!("{} ({} replicas)", cfg.kind, cfg.ensembles),
        &read_series_csv(&art.ensemble_csv)?,
    );
    Ok(())
}

fn failure(args: FailureArgs) -> anyhow::Result<()> {
    let steps_given = args.scenario.steps.is_some();
    let mut cfg = args.scenario.into_config()?;
    if !steps_given {
        cfg.steps = FailureSchedule::DEFAULT_STEPS;
    }
    let outputs = execute_failure(&cfg, &args.fractions, args.period)?;
    for (fraction, path) in outputs {
        println!("fraction {fraction} -> {}", path.display());
        summarize(&format!("  {} f={fraction}", cfg.kind), &read_series_csv(&path)?);
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<TopoError>() {
        Some(TopoError::Config(_) | TopoError::Parse { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => calibrate(a),
        Command::Run(a) => run(a),
        Command::Failure(a) => failure(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
