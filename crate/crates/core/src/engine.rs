//! Step loop shared by the three dynamics kinds: advances the state, fires
//! failure events and records one metrics row per step.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::calibration::GammaSource;
use crate::centralized::{centralized_step, Mode};
use crate::distributed::{distributed_step, refresh_coefficients, scan_all, LocalView};
use crate::error::TopoError;
use crate::failure::{apply_failure_event, FailureEvent, FailureSchedule, LinkPolicy};
use crate::hamiltonian::{network_cost, Coefficients, HamiltonianParams};
use crate::metrics::{connectivity_fraction, mean_scaled_range_sq, MetricsRecord, MetricsSeries, TauAccumulator};
use crate::mobility::{mobile_step, MobileContext, MobilityConfig};
use crate::model::NetworkState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsKind {
    Centralized,
    AdHoc,
    Mobile,
}

impl DynamicsKind {
    pub fn is_distributed(self) -> bool {
        !matches!(self, DynamicsKind::Centralized)
    }
}

impl fmt::Display for DynamicsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DynamicsKind::Centralized => "centralized",
            DynamicsKind::AdHoc => "adhoc",
            DynamicsKind::Mobile => "mobile",
        })
    }
}

impl FromStr for DynamicsKind {
    type Err = TopoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(DynamicsKind::Centralized),
            "adhoc" => Ok(DynamicsKind::AdHoc),
            "mobile" => Ok(DynamicsKind::Mobile),
            other => Err(TopoError::Config(format!(
                "unknown dynamics kind {other:?} (expected centralized, adhoc or mobile)"
            ))),
        }
    }
}

/// Absolute-unit settings for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsSettings {
    pub kind: DynamicsKind,
    pub mode: Mode,
    /// Standard deviation of range proposals.
    pub sigma: f64,
    pub scan_radius: f64,
    pub mobility: MobilityConfig,
    /// Density assumed by centralized nodes when reading a table.
    pub nominal_density: f64,
}

pub struct Simulation<'a, R> {
    state: NetworkState,
    params: HamiltonianParams,
    views: Vec<LocalView>,
    gamma: &'a GammaSource,
    settings: DynamicsSettings,
    rng: R,
    tau: TauAccumulator,
    series: MetricsSeries,
    step: u64,
}

impl<'a, R: Rng> Simulation<'a, R> {
    pub fn new(
        state: NetworkState,
        base: Coefficients,
        gamma: &'a GammaSource,
        settings: DynamicsSettings,
        rng: R,
    ) -> Self {
        let n = state.len();
        let mut sim = Simulation {
            params: HamiltonianParams::uniform(base, n),
            views: Vec::new(),
            gamma,
            settings,
            rng,
            tau: TauAccumulator::new(n),
            series: MetricsSeries::default(),
            step: 0,
            state,
        };
        sim.rescan();
        sim
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn params(&self) -> &HamiltonianParams {
        &self.params
    }

    pub fn series(&self) -> &MetricsSeries {
        &self.series
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Recomputes density estimates and range coefficients.
    fn rescan(&mut self) {
        if self.settings.kind.is_distributed() {
            self.views = scan_all(&self.state, self.settings.scan_radius);
            refresh_coefficients(&self.state, &self.views, self.gamma, &mut self.params);
        } else {
            for i in 0..self.state.len() {
                let t = self.state.nodes[i].temperature;
                self.params
                    .set_gamma(i, self.gamma.gamma_for(t, self.settings.nominal_density));
            }
        }
    }

    pub fn record(&mut self) {
        self.tau.update(&self.state.adjacency);
        self.series.records.push(MetricsRecord {
            step: self.step,
            cost: network_cost(&self.state, &self.params),
            connectivity: connectivity_fraction(&self.state),
            range2_mean: mean_scaled_range_sq(&self.state),
            tau: self.tau.tau(),
        });
    }

    /// One step of the configured dynamics, without recording.
    pub fn advance(&mut self) {
        self.step += 1;
        let s = &self.settings;
        match s.kind {
            DynamicsKind::Centralized => {
                centralized_step(&mut self.state, &self.params, s.sigma, s.mode, &mut self.rng);
            }
            DynamicsKind::AdHoc => {
                distributed_step(&mut self.state, &self.params, s.sigma, s.mode, &mut self.rng);
            }
            DynamicsKind::Mobile => {
                let ctx = MobileContext {
                    mobility: s.mobility,
                    gamma: self.gamma,
                    scan_radius: s.scan_radius,
                    sigma: s.sigma,
                    mode: s.mode,
                };
                mobile_step(&mut self.state, &mut self.params, &mut self.views, &ctx, &mut self.rng);
            }
        }
    }

    pub fn fail(&mut self, fraction: f64) -> FailureEvent {
        let policy = LinkPolicy::for_mode(self.settings.kind.is_distributed(), self.settings.mode, &self.params);
        let event = apply_failure_event(&mut self.state, fraction, policy, &mut self.rng);
        self.rescan();
        event
    }

    /// Records the initial row, then advances `steps` times. Failure events
    /// fire before the row of their step is recorded.
    pub fn run(&mut self, steps: u64, failure: Option<&FailureSchedule>) {
        let fire = |s: u64| failure.filter(|f| f.is_event(s, steps.max(1)));
        if let Some(f) = fire(0) {
            self.fail(f.fraction);
        }
        self.record();
        for _ in 0..steps {
            self.advance();
            if let Some(f) = fire(self.step) {
                self.fail(f.fraction);
            }
            self.record();
        }
    }

    pub fn into_parts(self) -> (NetworkState, MetricsSeries) {
        (self.state, self.series)
    }
}
