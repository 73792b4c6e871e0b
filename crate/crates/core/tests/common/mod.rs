#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topoctl::calibration::GammaSource;
use topoctl::hamiltonian::{delta_h_range_move, network_cost};
use topoctl::model::{build_initial_network, NetworkSpec, TemperatureSpec};
use topoctl::runner::execute_run;
use topoctl::{centralized_step, metropolis_accept, Coefficients, Dimension, DynamicsKind, HamiltonianParams};
use topoctl::{Mode, NetworkState, ScenarioConfig, Simulation};

pub type Check = Result<String, String>;

pub fn dist(state: &NetworkState, i: usize, j: usize) -> f64 {
    let axes = state.space.dimension.axes();
    let (a, b) = (&state.nodes[i].position, &state.nodes[j].position);
    (0..axes).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

/// Brute-force network cost straight from node and link lists.
pub fn oracle_cost(state: &NetworkState, params: &HamiltonianParams) -> f64 {
    let n = state.len();
    let mut total = 0.0;
    for i in 0..n {
        if !state.nodes[i].active {
            continue;
        }
        let c = params.get(i);
        let peers: Vec<usize> = (0..n).filter(|&j| state.adjacency.contains(i, j)).collect();
        let k = peers.len() as f64;
        let r = state.nodes[i].range;
        total += c.alpha * k * k + c.beta * k * k * k + c.gamma * r * r;
        total += peers.iter().map(|&j| c.lambda / dist(state, i, j)).sum::<f64>();
    }
    total
}

pub fn network(seed: u64, dimension: Dimension, temperature: TemperatureSpec) -> NetworkState {
    let spec = NetworkSpec {
        nodes: 100,
        density: 0.05,
        dimension,
        base_range_fraction: 0.05,
        temperature,
    };
    build_initial_network(&spec, seed).unwrap()
}

/// Incremental move deltas against the brute-force oracle, in 2D and 3D.
pub fn delta_h_agreement(moves: usize) -> Check {
    let mut worst: f64 = 0.0;
    for dimension in [Dimension::Two, Dimension::Three] {
        let mut state = network(11, dimension, TemperatureSpec::Fixed(100.0));
        let params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), state.len());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let side = state.space.side;
        for m in 0..moves {
            let i = rng.random_range(0..state.len());
            let new_r = rng.random_range(0.0..0.5 * side);
            let before = oracle_cost(&state, &params);
            let (dh, changes) = delta_h_range_move(&state, i, new_r, &params);
            state.nodes[i].range = new_r;
            for ch in changes {
                state.adjacency.set(ch.pair.0, ch.pair.1, ch.linked);
            }
            let full = oracle_cost(&state, &params) - before;
            let rel = (dh - full).abs() / full.abs().max(before.abs()).max(1.0);
            worst = worst.max(rel);
            if rel > 1e-9 {
                return Err(format!("move {m}: incremental {dh} vs full {full}"));
            }
        }
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

/// Committed cost at zero temperature over `steps` centralized steps.
pub fn zero_temperature_monotone(steps: usize) -> Check {
    let mut state = network(21, Dimension::Two, TemperatureSpec::Fixed(0.0));
    let params = HamiltonianParams::uniform(Coefficients::with_gamma(1.0), state.len());
    let sigma = 0.03 * state.space.side;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let start = network_cost(&state, &params);
    let mut prev = start;
    for step in 0..steps {
        centralized_step(&mut state, &params, sigma, Mode::Controlled, &mut rng);
        let now = network_cost(&state, &params);
        if now > prev {
            return Err(format!("step {step}: {prev} -> {now}"));
        }
        prev = now;
    }
    Ok(format!("cost {start:.0} -> {prev:.0}"))
}

/// Empirical acceptance of `dH = 1` at `T = 100`.
pub fn metropolis_rate(trials: usize) -> Check {
    let p = (-0.01f64).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let hits = (0..trials)
        .filter(|_| metropolis_accept(1.0, 100.0, rng.random()))
        .count();
    let rate = hits as f64 / trials as f64;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    let z = (rate - p) / sd;
    if z.abs() <= 3.0 {
        Ok(format!("rate {rate:.5} vs {p:.5} (z = {z:.2})"))
    } else {
        Err(format!("rate {rate:.5} vs {p:.5} (z = {z:.2})"))
    }
}

/// Link symmetry and the mutual-range rule; `geometric` also requires every
/// in-range pair to be linked.
pub fn link_violation(state: &NetworkState, geometric: bool) -> Option<String> {
    let n = state.len();
    for i in 0..n {
        if state.adjacency.contains(i, i) {
            return Some(format!("self-link on {i}"));
        }
        if !state.nodes[i].active && state.adjacency.degree(i) != 0 {
            return Some(format!("inactive node {i} has links"));
        }
        if state.nodes[i].range < 0.0 || !state.space.contains(&state.nodes[i].position) {
            return Some(format!("node {i} has invalid range or position"));
        }
        for j in (i + 1)..n {
            let linked = state.adjacency.contains(i, j);
            if linked != state.adjacency.contains(j, i) {
                return Some(format!("asymmetric pair ({i}, {j})"));
            }
            let (a, b) = (&state.nodes[i], &state.nodes[j]);
            let in_range = a.active && b.active && dist(state, i, j) <= a.range.min(b.range);
            if linked && !in_range {
                return Some(format!("link ({i}, {j}) out of range"));
            }
            if geometric && in_range && !linked {
                return Some(format!("in-range pair ({i}, {j}) unlinked"));
            }
        }
    }
    None
}

/// Checks links after every step of every dynamics kind, with failures mixed in.
pub fn fuzz_consistency(steps: u64) -> Check {
    let gamma = GammaSource::Fixed(1.0);
    let mut runs = 0;
    for (kind, dimension) in [
        (DynamicsKind::Centralized, Dimension::Two),
        (DynamicsKind::Centralized, Dimension::Three),
        (DynamicsKind::AdHoc, Dimension::Two),
        (DynamicsKind::AdHoc, Dimension::Three),
        (DynamicsKind::Mobile, Dimension::Two),
        (DynamicsKind::Mobile, Dimension::Three),
    ] {
        for baseline in [false, true] {
            let mut cfg = ScenarioConfig::adhoc();
            cfg.kind = kind;
            cfg.dimension = dimension;
            cfg.baseline = baseline;
            cfg.v_max = 1.0;
            let state = build_initial_network(&cfg.network_spec(), 41).unwrap();
            let rng = ChaCha8Rng::seed_from_u64(42);
            let mut sim = Simulation::new(state, cfg.coefficients(), &gamma, cfg.settings().unwrap(), rng);
            for step in 1..=steps {
                sim.advance();
                if step % 250 == 0 {
                    sim.fail(0.3);
                }
                if let Some(v) = link_violation(sim.state(), kind == DynamicsKind::Centralized) {
                    return Err(format!("{kind} {dimension:?} baseline={baseline} step {step}: {v}"));
                }
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs x {steps} steps clean"))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

/// Runs each kind twice with the same seed and compares every CSV byte for byte.
pub fn replay_identical() -> Check {
    let tables = tempfile::tempdir().unwrap();
    let table = tables.path().join("gamma_table.csv");
    fs::write(
        &table,
        "# topoctl gamma table v1\nT_bin,rho_bin,gamma,connectivity,tau\n0,0.05,1,1,0.05\n1000,0.05,0.5,1,0.04\n",
    )
    .unwrap();
    let mut files = 0;
    for kind in [DynamicsKind::Centralized, DynamicsKind::AdHoc, DynamicsKind::Mobile] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for dir in [a.path(), b.path()] {
            let mut cfg = ScenarioConfig::mobile();
            cfg.kind = kind;
            cfg.steps = 500;
            cfg.ensembles = 3;
            cfg.seed = 5;
            cfg.output = dir.to_path_buf();
            cfg.table = Some(table.clone());
            execute_run(&cfg).map_err(|e| e.to_string())?;
        }
        let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
        if fa != fb {
            return Err(format!("{kind}: outputs differ"));
        }
        files += fa.len();
    }
    Ok(format!("{files} CSVs identical"))
}
