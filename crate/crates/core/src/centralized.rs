//! Centralized static dynamics: one random node per step perturbs its range,
//! links follow mutual coverage, and the global cost change decides.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::hamiltonian::{delta_h_total, geometric_toggles, HamiltonianParams};
use crate::model::NetworkState;

/// Whether proposals go through the Metropolis test or are always kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Controlled,
    /// Same proposal process, every move accepted.
    Baseline,
}

/// A range perturbation for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveProposal {
    pub node: usize,
    pub delta_r: f64,
    pub new_range: f64,
}

impl MoveProposal {
    pub fn draw<R: Rng + ?Sized>(state: &NetworkState, node: usize, sigma: f64, rng: &mut R) -> Self {
        let delta_r = if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
        } else {
            0.0
        };
        MoveProposal {
            node,
            delta_r,
            new_range: (state.nodes[node].range + delta_r).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub proposal: Option<MoveProposal>,
    pub accepted: bool,
    pub delta_h: f64,
}

impl StepOutcome {
    pub(crate) fn idle() -> Self {
        StepOutcome {
            proposal: None,
            accepted: false,
            delta_h: 0.0,
        }
    }
}

/// Metropolis rule. Non-positive changes are always accepted; at zero
/// temperature every positive change is rejected.
pub fn metropolis_accept(delta_h: f64, temperature: f64, u: f64) -> bool {
    if delta_h <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    (-delta_h / temperature).exp() > u
}

/// One centralized Monte Carlo step. Rejected moves leave the state untouched.
pub fn centralized_step<R: Rng + ?Sized>(
    state: &mut NetworkState,
    params: &HamiltonianParams,
    sigma: f64,
    mode: Mode,
    rng: &mut R,
) -> StepOutcome {
    let i = rng.random_range(0..state.len());
    if !state.nodes[i].active {
        return StepOutcome::idle();
    }
    let proposal = MoveProposal::draw(state, i, sigma, rng);
    let toggled = geometric_toggles(state, i, proposal.new_range);
    let delta_h = delta_h_total(state, i, proposal.new_range, &toggled, params);
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
