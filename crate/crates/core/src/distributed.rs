//! Distributed dynamics for static ad hoc networks.
//!
//! Every node decides on its own: it estimates the node density around it,
//! picks its range coefficient from the calibration table, and accepts or
//! rejects its own range changes using only its own cost and temperature.
//! Newly reachable peers may refuse a link based on their own cost change.

use rand::Rng;

use crate::calibration::GammaSource;
use crate::centralized::{metropolis_accept, Mode, MoveProposal, StepOutcome};
use crate::hamiltonian::{delta_h_local_at, delta_h_own, HamiltonianParams};
use crate::model::{Dimension, NetworkState};

/// A node's local estimate of its surroundings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalView {
    pub node: usize,
    pub density: f64,
    pub scan_radius: f64,
}

/// Active nodes within `scan_radius` of `i` (itself included) per unit
/// area or volume of the scan ball.
pub fn estimate_density(state: &NetworkState, i: usize, scan_radius: f64) -> f64 {
    let count = (0..state.len())
        .filter(|&j| j == i || (state.nodes[j].active && state.distance(i, j) <= scan_radius))
        .count();
    count as f64 / ball_measure(state.space.dimension, scan_radius)
}

pub fn ball_measure(dimension: Dimension, radius: f64) -> f64 {
    match dimension {
        Dimension::Two => std::f64::consts::PI * radius * radius,
        Dimension::Three => 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3),
    }
}

pub fn scan_all(state: &NetworkState, scan_radius: f64) -> Vec<LocalView> {
    (0..state.len())
        .map(|i| LocalView {
            node: i,
            density: estimate_density(state, i, scan_radius),
            scan_radius,
        })
        .collect()
}

/// Sets every node's range coefficient from its temperature and density estimate.
pub fn refresh_coefficients(
    state: &NetworkState,
    views: &[LocalView],
    gamma: &GammaSource,
    params: &mut HamiltonianParams,
) {
    for view in views {
        let t = state.nodes[view.node].temperature;
        params.set_gamma(view.node, gamma.gamma_for(t, view.density));
    }
}

/// Local cost condition of the passive node `j` for a new link to `i`.
pub(crate) fn passive_accepts<R: Rng + ?Sized>(
    state: &NetworkState,
    i: usize,
    j: usize,
    params: &HamiltonianParams,
    rng: &mut R,
) -> bool {
    let delta = delta_h_local_at(state, j, state.distance(i, j), params);
    metropolis_accept(delta, state.nodes[j].temperature, rng.random())
}

/// Link decision for the pair `(i, j)`: out of mutual range never links;
/// in range links only if `j`'s local cost condition passes.
pub fn distributed_connection_metric<R: Rng + ?Sized>(
    state: &NetworkState,
    i: usize,
    j: usize,
    params: &HamiltonianParams,
    rng: &mut R,
) -> bool {
    if !state.in_range(i, j) {
        return false;
    }
    passive_accepts(state, i, j, params, rng)
}

/// Link flips caused by `r_i := new_range`: links that fall out of range
/// break, pairs that newly come into range pass through the passive node's
/// gate. Pairs already in range keep their current state.
pub(crate) fn gated_toggles<R: Rng + ?Sized>(
    state: &NetworkState,
    i: usize,
    new_range: f64,
    params: &HamiltonianParams,
    mode: Mode,
    rng: &mut R,
) -> Vec<usize> {
    let mut toggled = Vec::new();
    for j in 0..state.len() {
        if j == i {
            continue;
        }
        let in_new = state.in_range_with(i, new_range, j);
        let linked = state.adjacency.contains(i, j);
        if linked && !in_new {
            toggled.push(j);
        } else if !linked && in_new {
            let fresh = !state.in_range(i, j);
            let admit = match mode {
                Mode::Baseline => true,
                Mode::Controlled => fresh && passive_accepts(state, i, j, params, rng),
            };
            if admit {
                toggled.push(j);
            }
        }
    }
    toggled
}

/// Range move of node `i` judged by its own cost change and temperature.
pub fn distributed_move<R: Rng + ?Sized>(
    state: &mut NetworkState,
    i: usize,
    params: &HamiltonianParams,
    sigma: f64,
    mode: Mode,
    rng: &mut R,
) -> StepOutcome {
    if !state.nodes[i].active {
        return StepOutcome::idle();
    }
    let proposal = MoveProposal::draw(state, i, sigma, rng);
    let toggled = gated_toggles(state, i, proposal.new_range, params, mode, rng);
    let delta_h = delta_h_own(state, i, proposal.new_range, &toggled, params);
    let accepted = match mode {
        Mode::Baseline => true,
        Mode::Controlled => delta_h <= 0.0 || metropolis_accept(delta_h, state.nodes[i].temperature, rng.random()),
    };
    if accepted {
        state.nodes[i].range = proposal.new_range;
        for j in toggled {
            let linked = state.adjacency.contains(i, j);
            state.adjacency.set(i, j, !linked);
        }
    }
    StepOutcome {
        proposal: Some(proposal),
        accepted,
        delta_h,
    }
}

/// One distributed step: each node, in id order, proposes a range change
/// with probability `1/N`. Returns the outcomes of the nodes that proposed.
pub fn distributed_step<R: Rng + ?Sized>(
    state: &mut NetworkState,
    params: &HamiltonianParams,
    sigma: f64,
    mode: Mode,
    rng: &mut R,
) -> Vec<StepOutcome> {
    let n = state.len();
    let p = 1.0 / n as f64;
    let mut outcomes = Vec::new();
    for i in 0..n {
        if rng.random::<f64>() < p {
            outcomes.push(distributed_move(state, i, params, sigma, mode, rng));
        }
    }
    outcomes
}
