//! Periodic node failures: at every event the previously failed nodes come
//! back with freshly drawn ranges and a new random batch is switched off.

use rand::Rng;

use crate::centralized::Mode;
use crate::distributed::passive_accepts;
use crate::hamiltonian::HamiltonianParams;
use crate::model::{draw_range, NetworkState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestorePolicy {
    RestoreAtNextEvent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureSchedule {
    pub period: u64,
    pub fraction: f64,
    pub restore: RestorePolicy,
}

impl FailureSchedule {
    pub const DEFAULT_PERIOD: u64 = 6000;
    pub const DEFAULT_STEPS: u64 = 30_000;

    pub fn every(period: u64, fraction: f64) -> Self {
        FailureSchedule {
            period,
            fraction,
            restore: RestorePolicy::RestoreAtNextEvent,
        }
    }

    /// Events fire at multiples of the period strictly before the run ends.
    pub fn is_event(&self, step: u64, total_steps: u64) -> bool {
        self.period > 0 && step.is_multiple_of(self.period) && step < total_steps
    }

    pub fn event_steps(&self, total_steps: u64) -> Vec<u64> {
        (0..total_steps).step_by(self.period.max(1) as usize).collect()
    }
}

/// How a restored node re-enters the link structure.
#[derive(Debug, Clone, Copy)]
pub enum LinkPolicy<'a> {
    /// Link every mutually in-range peer.
    Geometric,
    /// New links must pass the peer's local cost condition.
    Gated(&'a HamiltonianParams),
}

impl<'a> LinkPolicy<'a> {
    pub fn for_mode(distributed: bool, mode: Mode, params: &'a HamiltonianParams) -> Self {
        if distributed && mode == Mode::Controlled {
            LinkPolicy::Gated(params)
        } else {
            LinkPolicy::Geometric
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FailureEvent {
    pub restored: Vec<usize>,
    /// Distinct nodes switched off, ascending.
    pub failed: Vec<usize>,
    pub picks: usize,
}

/// Restores all failed nodes, then switches off `floor(fraction * N)` picks
/// drawn uniformly with replacement.
pub fn apply_failure_event<R: Rng + ?Sized>(
    state: &mut NetworkState,
    fraction: f64,
    policy: LinkPolicy<'_>,
    rng: &mut R,
) -> FailureEvent {
    let n = state.len();
    let restored: Vec<usize> = (0..n).filter(|&i| !state.nodes[i].active).collect();
    for &i in &restored {
        let category = state.nodes[i].category;
        state.nodes[i].active = true;
        state.nodes[i].range = draw_range(state.base_range, category, rng);
    }
    for &i in &restored {
        match policy {
            LinkPolicy::Geometric => state.link_node_geometric(i),
            LinkPolicy::Gated(params) => {
                for j in 0..n {
                    if state.in_range(i, j)
                        && !state.adjacency.contains(i, j)
                        && passive_accepts(state, i, j, params, rng)
                    {
                        state.adjacency.set(i, j, true);
                    }
                }
            }
        }
    }

    let picks = (fraction.clamp(0.0, 1.0) * n as f64).floor() as usize;
    let mut failed = Vec::with_capacity(picks);
    for _ in 0..picks {
        let i = rng.random_range(0..n);
        if state.nodes[i].active {
            state.deactivate(i);
            failed.push(i);
        }
    }
    failed.sort_unstable();
    FailureEvent {
        restored,
        failed,
        picks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{total_hamiltonian, Coefficients};
    use crate::metrics::connectivity_fraction;
    use crate::model::{build_initial_network, Dimension, NetworkSpec, TemperatureSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn connected_state(seed: u64) -> NetworkState {
        let spec = NetworkSpec {
            nodes: 100,
            density: 0.05,
            dimension: Dimension::Two,
            base_range_fraction: 0.25,
            temperature: TemperatureSpec::Fixed(100.0),
        };
        build_initial_network(&spec, seed).unwrap()
    }

    #[test]
    fn default_event_steps() {
        let s = FailureSchedule::every(6000, 0.1);
        assert_eq!(s.event_steps(30_000), vec![0, 6000, 12_000, 18_000, 24_000]);
        assert!(s.is_event(24_000, 30_000));
        assert!(!s.is_event(30_000, 30_000));
        assert!(!s.is_event(6001, 30_000));
    }

    #[test]
    fn zero_fraction_only_restores() {
        let mut state = connected_state(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let before = state.clone();
        let ev = apply_failure_event(&mut state, 0.0, LinkPolicy::Geometric, &mut rng);
        assert_eq!(state, before);
        assert!(ev.failed.is_empty() && ev.restored.is_empty());
    }

    #[test]
    fn half_fraction_picks_with_replacement() {
        let mut state = connected_state(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ev = apply_failure_event(&mut state, 0.5, LinkPolicy::Geometric, &mut rng);
        assert_eq!(ev.picks, 50);
        assert!(ev.failed.len() <= 50);
        assert!(ev.failed.len() < 50, "with replacement, repeats are near certain");
        assert_eq!(state.active_count(), 100 - ev.failed.len());
        let params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), 100);
        for &i in &ev.failed {
            assert_eq!(state.degree(i), 0);
            assert_eq!(state.nodes[i].range, 0.0);
            assert_eq!(
                crate::hamiltonian::node_hamiltonian(&state, i, &params).unwrap().total,
                0.0
            );
        }
        assert!(state.consistency_violation().is_none());
        assert!(total_hamiltonian(&state, &params).is_ok());
    }

    #[test]
    fn next_event_restores_previous_failures() {
        let mut state = connected_state(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let first = apply_failure_event(&mut state, 0.3, LinkPolicy::Geometric, &mut rng);
        let second = apply_failure_event(&mut state, 0.3, LinkPolicy::Geometric, &mut rng);
        assert_eq!(second.restored, first.failed);
        assert_eq!(state.active_count(), 100 - second.failed.len());
        assert!(state.stale_link().is_none());
        assert!(state.consistency_violation().is_none());
    }

    #[test]
    fn restored_nodes_relink_by_policy() {
        let mut state = connected_state(7);
        let params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), 100);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        apply_failure_event(&mut state, 0.2, LinkPolicy::Gated(&params), &mut rng);
        apply_failure_event(&mut state, 0.0, LinkPolicy::Gated(&params), &mut rng);
        assert_eq!(state.active_count(), 100);
        assert!(state.stale_link().is_none());
        assert!(connectivity_fraction(&state) > 0.0);
    }
}
