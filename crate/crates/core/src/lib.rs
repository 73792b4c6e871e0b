//! Self-organizing topology control for spatial ad hoc networks.
//!
//! Nodes adjust their transmission ranges under Metropolis dynamics on a
//! network cost that rewards long links and penalizes range and high degree.
//! Three settings are supported: a centralized static network, a distributed
//! static ad hoc network and a mobile ad hoc network, all with optional
//! periodic node failures.

pub mod calibration;
pub mod centralized;
pub mod config;
pub mod distributed;
pub mod engine;
pub mod error;
pub mod failure;
pub mod hamiltonian;
pub mod metrics;
pub mod mobility;
pub mod model;
pub mod runner;

pub use calibration::{build_table, lookup_gamma, run_sweep, CalibrationTable, GammaSource, SweepGrid, SweepPoint};
pub use centralized::{centralized_step, metropolis_accept, Mode};
pub use config::{GammaSetting, ScenarioConfig};
pub use engine::{DynamicsKind, DynamicsSettings, Simulation};
pub use error::{Result, TopoError};
pub use failure::FailureSchedule;
pub use hamiltonian::{Coefficients, HamiltonianParams};
pub use metrics::{MetricsRecord, MetricsSeries};
pub use model::{build_initial_network, Dimension, NetworkState};
