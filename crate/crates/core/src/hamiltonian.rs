//! Network cost function and its incremental changes.
//!
//! Each node contributes
//!
//! ```text
//! H_i = alpha_i k_i^2 + beta_i k_i^3 + gamma_i r_i^2 + lambda_i * sum_{j != i} l_ij / d_ij
//! ```
//!
//! and the network cost is the sum over active nodes. The long-link sum runs
//! over ordered pairs, so a link `{i, j}` contributes `lambda_i / d + lambda_j / d`.

use crate::error::{Result, TopoError};
use crate::model::NetworkState;

/// Cost coefficients of a single node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Coefficients {
    pub const DEFAULT_ALPHA: f64 = -0.5;
    pub const DEFAULT_BETA: f64 = 0.3;
    pub const DEFAULT_LAMBDA: f64 = -1000.0;

    /// Default degree and long-link coefficients with the given range coefficient.
    pub fn with_gamma(gamma: f64) -> Self {
        Coefficients {
            alpha: Self::DEFAULT_ALPHA,
            beta: Self::DEFAULT_BETA,
            gamma,
            lambda: Self::DEFAULT_LAMBDA,
        }
    }

    #[inline]
    pub fn degree_energy(&self, k: usize) -> f64 {
        let k = k as f64;
        self.alpha * k * k + self.beta * k * k * k
    }
}

/// Per-node coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParams {
    per_node: Vec<Coefficients>,
}

impl HamiltonianParams {
    pub fn uniform(coefficients: Coefficients, nodes: usize) -> Self {
        HamiltonianParams {
            per_node: vec![coefficients; nodes],
        }
    }

    pub fn from_vec(per_node: Vec<Coefficients>) -> Self {
        HamiltonianParams { per_node }
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Coefficients {
        &self.per_node[i]
    }

    pub fn set_gamma(&mut self, i: usize, gamma: f64) {
        self.per_node[i].gamma = gamma;
    }

    pub fn len(&self) -> usize {
        self.per_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coefficients> {
        self.per_node.iter()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub degree2_term: f64,
    pub degree3_term: f64,
    pub range2_term: f64,
    pub longlink_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_terms(degree2_term: f64, degree3_term: f64, range2_term: f64, longlink_term: f64) -> Self {
        EnergyBreakdown {
            degree2_term,
            degree3_term,
            range2_term,
            longlink_term,
            total: degree2_term + degree3_term + range2_term + longlink_term,
        }
    }
}

/// Cost contribution of node `i`. Inactive nodes contribute nothing.
pub fn node_hamiltonian(state: &NetworkState, i: usize, params: &HamiltonianParams) -> Result<EnergyBreakdown> {
    let node = &state.nodes[i];
    if !node.active {
        return Ok(EnergyBreakdown::default());
    }
    let c = params.get(i);
    let k = state.degree(i) as f64;
    let mut inverse_lengths = 0.0;
    for j in state.adjacency.neighbors(i) {
        let d = state.distance(i, j);
        if d == 0.0 {
            return Err(TopoError::DegenerateGeometry(i, j));
        }
        inverse_lengths += 1.0 / d;
    }
    Ok(EnergyBreakdown::from_terms(
        c.alpha * k * k,
        c.beta * k * k * k,
        c.gamma * node.range * node.range,
        c.lambda * inverse_lengths,
    ))
}

pub fn total_hamiltonian(state: &NetworkState, params: &HamiltonianParams) -> Result<f64> {
    (0..state.len()).try_fold(0.0, |acc, i| Ok(acc + node_hamiltonian(state, i, params)?.total))
}

/// Unchecked total cost for per-step metrics. A coincident linked pair yields
/// an infinite value instead of an error.
pub fn network_cost(state: &NetworkState, params: &HamiltonianParams) -> f64 {
    let mut total = 0.0;
    for (i, node) in state.nodes.iter().enumerate() {
        if !node.active {
            continue;
        }
        let c = params.get(i);
        let mut inverse_lengths = 0.0;
        for j in state.adjacency.neighbors(i) {
            inverse_lengths += 1.0 / state.distance(i, j);
        }
        total += c.degree_energy(state.degree(i)) + c.gamma * node.range * node.range + c.lambda * inverse_lengths;
    }
    total
}

/// One flipped link incident to the moving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkChange {
    pub pair: (usize, usize),
    pub linked: bool,
}

/// Peers of `i` whose link state differs from the mutual-coverage rule once
/// `r_i := new_range`.
pub fn geometric_toggles(state: &NetworkState, i: usize, new_range: f64) -> Vec<usize> {
    (0..state.len())
        .filter(|&j| j != i && state.in_range_with(i, new_range, j) != state.adjacency.contains(i, j))
        .collect()
}

/// Exact network cost change for `r_i := new_range` with the links to
/// `toggled` peers flipped. Each peer must appear at most once.
pub fn delta_h_total(
    state: &NetworkState,
    i: usize,
    new_range: f64,
    toggled: &[usize],
    params: &HamiltonianParams,
) -> f64 {
    let ci = params.get(i);
    let old_range = state.nodes[i].range;
    let k_i = state.degree(i);
    let mut new_k_i = k_i as isize;
    let mut delta = ci.gamma * (new_range * new_range - old_range * old_range);
    for &j in toggled {
        let cj = params.get(j);
        let k_j = state.degree(j);
        let d = state.distance(i, j);
        if state.adjacency.contains(i, j) {
            delta -= (ci.lambda + cj.lambda) / d;
            delta += cj.degree_energy(k_j - 1) - cj.degree_energy(k_j);
            new_k_i -= 1;
        } else {
            delta += (ci.lambda + cj.lambda) / d;
            delta += cj.degree_energy(k_j + 1) - cj.degree_energy(k_j);
            new_k_i += 1;
        }
    }
    delta + ci.degree_energy(new_k_i as usize) - ci.degree_energy(k_i)
}

/// Change of node `i`'s own contribution `H_i` for the same move.
pub fn delta_h_own(
    state: &NetworkState,
    i: usize,
    new_range: f64,
    toggled: &[usize],
    params: &HamiltonianParams,
) -> f64 {
    let ci = params.get(i);
    let old_range = state.nodes[i].range;
    let k_i = state.degree(i);
    let mut new_k_i = k_i as isize;
    let mut delta = ci.gamma * (new_range * new_range - old_range * old_range);
    for &j in toggled {
        let d = state.distance(i, j);
        if state.adjacency.contains(i, j) {
            delta -= ci.lambda / d;
            new_k_i -= 1;
        } else {
            delta += ci.lambda / d;
            new_k_i += 1;
        }
    }
    delta + ci.degree_energy(new_k_i as usize) - ci.degree_energy(k_i)
}

/// Cost change of setting `r_i := new_range` and reconfiguring links by
/// mutual coverage, without committing anything.
pub fn delta_h_range_move(
    state: &NetworkState,
    i: usize,
    new_range: f64,
    params: &HamiltonianParams,
) -> (f64, Vec<LinkChange>) {
    let toggled = geometric_toggles(state, i, new_range);
    let delta = delta_h_total(state, i, new_range, &toggled, params);
    let changes = toggled
        .into_iter()
        .map(|j| LinkChange {
            pair: (i, j),
            linked: !state.adjacency.contains(i, j),
        })
        .collect();
    (delta, changes)
}

/// Change of the passive node `j`'s own cost if the absent link `{i, j}` were created.
pub fn delta_h_local(state: &NetworkState, j: usize, i: usize, params: &HamiltonianParams) -> Result<f64> {
    debug_assert_ne!(i, j);
    let d = state.distance(i, j);
    if d == 0.0 {
        return Err(TopoError::DegenerateGeometry(i, j));
    }
    Ok(delta_h_local_at(state, j, d, params))
}

#[inline]
pub(crate) fn delta_h_local_at(state: &NetworkState, j: usize, d: f64, params: &HamiltonianParams) -> f64 {
    let cj = params.get(j);
    let k = state.degree(j);
    cj.degree_energy(k + 1) - cj.degree_energy(k) + cj.lambda / d
}
