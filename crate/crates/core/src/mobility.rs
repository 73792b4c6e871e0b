//! Memoryless random-walk motion inside a reflecting box, and the mobile
//! ad hoc step built on top of it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calibration::GammaSource;
use crate::centralized::{Mode, StepOutcome};
use crate::distributed::{distributed_step, passive_accepts, refresh_coefficients, scan_all, LocalView};
use crate::hamiltonian::HamiltonianParams;
use crate::model::{Adjacency, NetworkState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityModel {
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig {
    /// Largest per-axis displacement per time step.
    pub v_max: f64,
    pub model: MobilityModel,
}

impl MobilityConfig {
    pub fn random_walk(v_max: f64) -> Self {
        MobilityConfig {
            v_max,
            model: MobilityModel::RandomWalk,
        }
    }
}

/// Normal sample with scale `v_max`, redrawn until it lies in `[-v_max, v_max]`.
/// Draws nothing when `v_max` is zero.
pub fn truncated_normal<R: Rng + ?Sized>(v_max: f64, rng: &mut R) -> f64 {
    if v_max <= 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = z * v_max;
        if x.abs() <= v_max {
            return x;
        }
    }
}

/// Folds a coordinate back into `[0, side]` by mirror reflection.
pub fn reflect(x: f64, side: f64) -> f64 {
    if (0.0..=side).contains(&x) {
        return x;
    }
    if (-side..0.0).contains(&x) {
        return -x;
    }
    if x > side && x <= 2.0 * side {
        return 2.0 * side - x;
    }
    let period = 2.0 * side;
    let m = x.rem_euclid(period);
    if m <= side {
        m
    } else {
        period - m
    }
}

/// Displaces every active node by an independent bounded step per axis.
pub fn mobility_step<R: Rng + ?Sized>(state: &mut NetworkState, cfg: &MobilityConfig, rng: &mut R) {
    if cfg.v_max <= 0.0 {
        return;
    }
    let axes = state.space.dimension.axes();
    let side = state.space.side;
    for node in state.nodes.iter_mut().filter(|n| n.active) {
        for x in node.position.iter_mut().take(axes) {
            *x = reflect(*x + truncated_normal(cfg.v_max, rng), side);
        }
    }
    state.refresh_distances();
}

/// Bitset of mutually in-range pairs.
pub fn in_range_pairs(state: &NetworkState) -> Adjacency {
    let n = state.len();
    let mut pairs = Adjacency::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if state.in_range(i, j) {
                pairs.set(i, j, true);
            }
        }
    }
    pairs
}

/// Repairs links after motion: pairs that left mutual range break; pairs
/// that entered it link through the passive (higher id) node's gate, or
/// unconditionally in baseline mode.
pub fn relink_after_motion<R: Rng + ?Sized>(
    state: &mut NetworkState,
    previously_in_range: &Adjacency,
    params: &HamiltonianParams,
    mode: Mode,
    rng: &mut R,
) {
    let n = state.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let in_now = state.in_range(i, j);
            let linked = state.adjacency.contains(i, j);
            if linked && !in_now {
                state.adjacency.set(i, j, false);
            } else if !linked && in_now {
                let admit = match mode {
                    Mode::Baseline => true,
                    Mode::Controlled => {
                        !previously_in_range.contains(i, j) && passive_accepts(state, i, j, params, rng)
                    }
                };
                if admit {
                    state.adjacency.set(i, j, true);
                }
            }
        }
    }
}

/// Everything a mobile step needs besides the state and RNG.
pub struct MobileContext<'a> {
    pub mobility: MobilityConfig,
    pub gamma: &'a GammaSource,
    pub scan_radius: f64,
    pub sigma: f64,
    pub mode: Mode,
}

/// Move, repair links, rescan densities and coefficients, then one distributed step.
pub fn mobile_step<R: Rng + ?Sized>(
    state: &mut NetworkState,
    params: &mut HamiltonianParams,
    views: &mut Vec<LocalView>,
    ctx: &MobileContext<'_>,
    rng: &mut R,
) -> Vec<StepOutcome> {
    if ctx.mobility.v_max > 0.0 {
        let before = in_range_pairs(state);
        mobility_step(state, &ctx.mobility, rng);
        relink_after_motion(state, &before, params, ctx.mode, rng);
        *views = scan_all(state, ctx.scan_radius);
        refresh_coefficients(state, views, ctx.gamma, params);
    }
    distributed_step(state, params, ctx.sigma, ctx.mode, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Coefficients;
    use crate::model::{build_initial_network, Dimension, NetworkSpec, TemperatureSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(seed: u64, dimension: Dimension) -> NetworkState {
        let spec = NetworkSpec {
            nodes: 100,
            density: 0.05,
            dimension,
            base_range_fraction: 0.15,
            temperature: TemperatureSpec::Uniform { low: 0.0, high: 1000.0 },
        };
        build_initial_network(&spec, seed).unwrap()
    }

    #[test]
    fn reflection_examples() {
        assert!((reflect(-0.1, 10.0) - 0.1).abs() < 1e-15);
        assert!((reflect(10.25, 10.0) - 9.75).abs() < 1e-12);
        assert_eq!(reflect(3.0, 10.0), 3.0);
        assert!((reflect(-25.0, 10.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn displacements_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut max_seen: f64 = 0.0;
        for _ in 0..100_000 {
            let x = truncated_normal(0.3, &mut rng);
            assert!(x.abs() <= 0.3);
            max_seen = max_seen.max(x.abs());
        }
        assert!(max_seen > 0.29);
    }

    #[test]
    fn zero_velocity_keeps_positions_and_rng() {
        let mut s = state(2, Dimension::Two);
        let before = s.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut fresh = ChaCha8Rng::seed_from_u64(3);
        mobility_step(&mut s, &MobilityConfig::random_walk(0.0), &mut rng);
        assert_eq!(s, before);
        assert_eq!(rng.random::<u64>(), fresh.random::<u64>());
    }

    #[test]
    fn positions_stay_in_domain() {
        for dim in [Dimension::Two, Dimension::Three] {
            let mut s = state(4, dim);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let cfg = MobilityConfig::random_walk(3.0);
            for _ in 0..500 {
                mobility_step(&mut s, &cfg, &mut rng);
                assert!(s.nodes.iter().all(|n| s.space.contains(&n.position)));
            }
        }
    }

    #[test]
    fn relinking_drops_out_of_range_links() {
        let mut s = state(6, Dimension::Two);
        let params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), 100);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = MobilityConfig::random_walk(0.3);
        for _ in 0..300 {
            let before = in_range_pairs(&s);
            mobility_step(&mut s, &cfg, &mut rng);
            relink_after_motion(&mut s, &before, &params, Mode::Controlled, &mut rng);
            assert!(s.stale_link().is_none());
            assert!(s.consistency_violation().is_none());
        }
    }

    #[test]
    fn zero_velocity_matches_distributed_dynamics() {
        let base = state(8, Dimension::Two);
        let gamma = GammaSource::Fixed(1.0);
        let ctx = MobileContext {
            mobility: MobilityConfig::random_walk(0.0),
            gamma: &gamma,
            scan_radius: 0.25 * base.space.side,
            sigma: 1.0,
            mode: Mode::Controlled,
        };
        let mut views = scan_all(&base, ctx.scan_radius);
        let mut params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), 100);
        refresh_coefficients(&base, &views, &gamma, &mut params);
        let static_params = params.clone();

        let mut mobile = base.clone();
        let mut fixed = base;
        let mut rng_a = ChaCha8Rng::seed_from_u64(9);
        let mut rng_b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            mobile_step(&mut mobile, &mut params, &mut views, &ctx, &mut rng_a);
            distributed_step(&mut fixed, &static_params, 1.0, Mode::Controlled, &mut rng_b);
            assert_eq!(mobile, fixed);
        }
    }
}
