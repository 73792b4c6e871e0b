//! Scenario configuration and its flat `key=value` file format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::centralized::Mode;
use crate::engine::{DynamicsKind, DynamicsSettings};
use crate::error::{Result, TopoError};
use crate::failure::FailureSchedule;
use crate::hamiltonian::Coefficients;
use crate::mobility::MobilityConfig;
use crate::model::{Dimension, NetworkSpec, SpaceSpec, TemperatureSpec};

/// Standard deviation of range proposals as a fraction of the side length.
/// Equals a unit-variance-2 step in the default 2D network (N=100, rho=0.05).
pub const DEFAULT_RANGE_STEP_FRACTION: f64 = 0.031_622_776_601_683_79;
pub const DEFAULT_BASE_RANGE_FRACTION: f64 = 0.05;
pub const DEFAULT_SCAN_RADIUS_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSetting {
    Fixed(f64),
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub dimension: Dimension,
    pub nodes: usize,
    pub density: f64,
    pub kind: DynamicsKind,
    pub baseline: bool,
    pub temperature: TemperatureSpec,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: GammaSetting,
    pub steps: u64,
    pub ensembles: usize,
    pub seed: u64,
    pub v_max: f64,
    pub failure: Option<FailureSchedule>,
    pub output: PathBuf,
    pub table: Option<PathBuf>,
    pub base_range_fraction: f64,
    pub range_step_fraction: f64,
    pub scan_radius_fraction: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::centralized()
    }
}

impl ScenarioConfig {
    /// Static centralized network: N=100, rho=0.05, T=100, gamma=1, 15000 steps.
    pub fn centralized() -> Self {
        ScenarioConfig {
            dimension: Dimension::Two,
            nodes: 100,
            density: 0.05,
            kind: DynamicsKind::Centralized,
            baseline: false,
            temperature: TemperatureSpec::Fixed(100.0),
            alpha: Coefficients::DEFAULT_ALPHA,
            beta: Coefficients::DEFAULT_BETA,
            lambda: Coefficients::DEFAULT_LAMBDA,
            gamma: GammaSetting::Fixed(1.0),
            steps: 15_000,
            ensembles: 10,
            seed: 1,
            v_max: 0.3,
            failure: None,
            output: PathBuf::from("out"),
            table: None,
            base_range_fraction: DEFAULT_BASE_RANGE_FRACTION,
            range_step_fraction: DEFAULT_RANGE_STEP_FRACTION,
            scan_radius_fraction: DEFAULT_SCAN_RADIUS_FRACTION,
        }
    }

    /// Distributed static network with per-node temperatures in `[0, 1000]`
    /// and table-driven gamma.
    pub fn adhoc() -> Self {
        ScenarioConfig {
            kind: DynamicsKind::AdHoc,
            temperature: TemperatureSpec::Uniform { low: 0.0, high: 1000.0 },
            gamma: GammaSetting::Table,
            ..ScenarioConfig::centralized()
        }
    }

    pub fn mobile() -> Self {
        ScenarioConfig {
            kind: DynamicsKind::Mobile,
            ..ScenarioConfig::adhoc()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TopoError::Config(msg));
        if self.nodes < 2 {
            return bad(format!("nodes must be at least 2, got {}", self.nodes));
        }
        if !(self.density > 0.0 && self.density <= 0.1) {
            return bad(format!("density must lie in (0, 0.1], got {}", self.density));
        }
        let t_ok = |t: f64| (0.0..=1000.0).contains(&t);
        match self.temperature {
            TemperatureSpec::Fixed(t) if !t_ok(t) => return bad(format!("temperature {t} outside [0, 1000]")),
            TemperatureSpec::Uniform { low, high } if !(t_ok(low) && t_ok(high) && low <= high) => {
                return bad(format!("temperature interval [{low}, {high}] outside [0, 1000]"))
            }
            _ => {}
        }
        if let GammaSetting::Fixed(g) = self.gamma {
            if !(0.0..=100.0).contains(&g) {
                return bad(format!("gamma {g} outside [0, 100]"));
            }
        }
        if ![self.alpha, self.beta, self.lambda].iter().all(|c| c.is_finite()) {
            return bad("Hamiltonian coefficients must be finite".into());
        }
        if self.ensembles == 0 {
            return bad("ensembles must be at least 1".into());
        }
        if !(self.v_max >= 0.0 && self.v_max.is_finite()) {
            return bad(format!("v_max must be non-negative, got {}", self.v_max));
        }
        if let Some(f) = &self.failure {
            if f.period == 0 {
                return bad("failure period must be at least 1".into());
            }
            if !(0.0..=0.5).contains(&f.fraction) {
                return bad(format!("failure fraction {} outside [0, 0.5]", f.fraction));
            }
        }
        for (name, v) in [
            ("base_range", self.base_range_fraction),
            ("range_step", self.range_step_fraction),
            ("scan_radius", self.scan_radius_fraction),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.scan_radius_fraction == 0.0 && self.kind.is_distributed() {
            return bad("scan_radius must be positive for distributed dynamics".into());
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        if self.baseline {
            Mode::Baseline
        } else {
            Mode::Controlled
        }
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            alpha: self.alpha,
            beta: self.beta,
            gamma: match self.gamma {
                GammaSetting::Fixed(g) => g,
                GammaSetting::Table => 0.0,
            },
            lambda: self.lambda,
        }
    }

    pub fn network_spec(&self) -> NetworkSpec {
        NetworkSpec {
            nodes: self.nodes,
            density: self.density,
            dimension: self.dimension,
            base_range_fraction: self.base_range_fraction,
            temperature: self.temperature,
        }
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::from_density(self.nodes, self.density, self.dimension)
    }

    pub fn settings(&self) -> Result<DynamicsSettings> {
        let side = self.space()?.side;
        Ok(DynamicsSettings {
            kind: self.kind,
            mode: self.mode(),
            sigma: self.range_step_fraction * side,
            scan_radius: self.scan_radius_fraction * side,
            mobility: MobilityConfig::random_walk(self.v_max),
            nominal_density: self.density,
        })
    }

    /// Replayable `key=value` echo; parses back to an equal config.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("dimension", self.dimension.axes().to_string());
        put("nodes", self.nodes.to_string());
        put("density", self.density.to_string());
        put("kind", self.kind.to_string());
        put("baseline", self.baseline.to_string());
        put(
            "temperature",
            match self.temperature {
                TemperatureSpec::Fixed(t) => t.to_string(),
                TemperatureSpec::Uniform { low, high } => format!("uniform:{low}:{high}"),
            },
        );
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("lambda", self.lambda.to_string());
        put(
            "gamma",
            match self.gamma {
                GammaSetting::Fixed(g) => g.to_string(),
                GammaSetting::Table => "table".into(),
            },
        );
        put("steps", self.steps.to_string());
        put("ensembles", self.ensembles.to_string());
        put("seed", self.seed.to_string());
        put("v_max", self.v_max.to_string());
        match &self.failure {
            Some(f) => {
                put("failure_fraction", f.fraction.to_string());
                put("failure_period", f.period.to_string());
            }
            None => put("failure_fraction", "none".into()),
        }
        put("output", self.output.display().to_string());
        put(
            "table",
            self.table
                .as_ref()
                .map_or_else(|| "none".into(), |p| p.display().to_string()),
        );
        put("base_range", self.base_range_fraction.to_string());
        put("range_step", self.range_step_fraction.to_string());
        put("scan_radius", self.scan_radius_fraction.to_string());
        out
    }

    /// Parses a `key=value` file. Unlisted keys keep the defaults of the
    /// file's `kind`; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| TopoError::Parse {
                what: "config",
                detail: format!("line {}: expected key=value, got {line:?}", lineno + 1),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }

        let kind = match pairs.iter().find(|(k, _)| k == "kind") {
            Some((_, v)) => v.parse()?,
            None => DynamicsKind::Centralized,
        };
        let mut cfg = match kind {
            DynamicsKind::Centralized => ScenarioConfig::centralized(),
            DynamicsKind::AdHoc => ScenarioConfig::adhoc(),
            DynamicsKind::Mobile => ScenarioConfig::mobile(),
        };
        let mut failure_fraction: Option<f64> = None;
        let mut failure_period = FailureSchedule::DEFAULT_PERIOD;

        for (k, v) in &pairs {
            match k.as_str() {
                "dimension" => cfg.dimension = Dimension::from_axes(num(k, v)?)?,
                "nodes" => cfg.nodes = num(k, v)?,
                "density" => cfg.density = num(k, v)?,
                "kind" => {}
                "baseline" => cfg.baseline = num(k, v)?,
                "temperature" => cfg.temperature = parse_temperature(v)?,
                "alpha" => cfg.alpha = num(k, v)?,
                "beta" => cfg.beta = num(k, v)?,
                "lambda" => cfg.lambda = num(k, v)?,
                "gamma" => {
                    cfg.gamma = if v == "table" {
                        GammaSetting::Table
                    } else {
                        GammaSetting::Fixed(num(k, v)?)
                    }
                }
                "steps" => cfg.steps = num(k, v)?,
                "ensembles" => cfg.ensembles = num(k, v)?,
                "seed" => cfg.seed = num(k, v)?,
                "v_max" => cfg.v_max = num(k, v)?,
                "failure_fraction" => failure_fraction = if v == "none" { None } else { Some(num(k, v)?) },
                "failure_period" => failure_period = num(k, v)?,
                "output" => cfg.output = PathBuf::from(v),
                "table" => cfg.table = (v != "none" && !v.is_empty()).then(|| PathBuf::from(v)),
                "base_range" => cfg.base_range_fraction = num(k, v)?,
                "range_step" => cfg.range_step_fraction = num(k, v)?,
                "scan_radius" => cfg.scan_radius_fraction = num(k, v)?,
                other => {
                    return Err(TopoError::Parse {
                        what: "config",
                        detail: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        cfg.failure = failure_fraction.map(|f| FailureSchedule::every(failure_period, f));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TopoError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_key_values()).map_err(|e| TopoError::io(path, e))
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| TopoError::Parse {
        what: "config",
        detail: format!("bad value {value:?} for {key}"),
    })
}

/// `100` or `uniform:LOW:HIGH`.
pub fn parse_temperature(v: &str) -> Result<TemperatureSpec> {
    if let Some(rest) = v.strip_prefix("uniform:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(|| TopoError::Parse {
            what: "temperature",
            detail: format!("expected uniform:LOW:HIGH, got {v:?}"),
        })?;
        Ok(TemperatureSpec::Uniform {
            low: num("temperature", lo)?,
            high: num("temperature", hi)?,
        })
    } else {
        Ok(TemperatureSpec::Fixed(num("temperature", v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = ScenarioConfig::mobile();
        cfg.failure = Some(FailureSchedule::every(6000, 0.3));
        cfg.table = Some(PathBuf::from("calib/gamma_table.csv"));
        cfg.density = 0.075;
        cfg.seed = u64::MAX;
        for c in [ScenarioConfig::centralized(), ScenarioConfig::adhoc(), cfg] {
            let back = ScenarioConfig::parse(&c.to_key_values()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn partial_file_uses_kind_defaults() {
        let cfg = ScenarioConfig::parse("# fig 6\nkind=adhoc\nsteps=100\n").unwrap();
        assert_eq!(cfg.kind, DynamicsKind::AdHoc);
        assert_eq!(cfg.steps, 100);
        assert_eq!(cfg.gamma, GammaSetting::Table);
        assert_eq!(cfg.temperature, TemperatureSpec::Uniform { low: 0.0, high: 1000.0 });
    }

    #[test]
    fn ranges_enforced() {
        for bad in [
            "density=0.2",
            "density=0",
            "temperature=2000",
            "gamma=150",
            "nodes=1",
            "ensembles=0",
            "failure_fraction=0.7",
            "dimension=4",
            "kind=flying",
            "colour=blue",
            "no equals sign",
        ] {
            assert!(ScenarioConfig::parse(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn settings_scale_with_side() {
        let cfg = ScenarioConfig::centralized();
        let s = cfg.settings().unwrap();
        let side = cfg.space().unwrap().side;
        assert!((s.sigma - cfg.range_step_fraction * side).abs() < 1e-12);
        assert!((s.scan_radius - 0.25 * side).abs() < 1e-12);
    }
}
