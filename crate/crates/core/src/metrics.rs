//! Evaluation metrics: cost, giant-component connectivity, mean scaled
//! range squared and communication stability (tau).

use serde::{Deserialize, Serialize};

use crate::error::{Result, TopoError};
use crate::model::{set_bits, Adjacency, NetworkState};

/// Fraction of active nodes in the largest connected component.
///
/// Returns 0 when no node is active.
pub fn connectivity_fraction(state: &NetworkState) -> f64 {
    let active = state.active_count();
    if active == 0 {
        return 0.0;
    }
    largest_component(state) as f64 / active as f64
}

/// Size of the largest connected component among active nodes.
pub fn largest_component(state: &NetworkState) -> usize {
    let n = state.len();
    let words = state.adjacency.words_per_row();
    let mut visited = vec![0u64; words];
    let mut stack = Vec::with_capacity(n);
    let mut best = 0;
    for start in 0..n {
        if !state.nodes[start].active || visited[start / 64] >> (start % 64) & 1 == 1 {
            continue;
        }
        visited[start / 64] |= 1 << (start % 64);
        stack.push(start);
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            let row = state.adjacency.row(v);
            for w in 0..words {
                let mut fresh = row[w] & !visited[w];
                visited[w] |= fresh;
                while fresh != 0 {
                    let b = fresh.trailing_zeros() as usize;
                    fresh &= fresh - 1;
                    stack.push(w * 64 + b);
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// Mean of `(r_i / L)^2` over active nodes.
pub fn mean_scaled_range_sq(state: &NetworkState) -> f64 {
    let side = state.space.side;
    let (sum, count) = state
        .nodes
        .iter()
        .filter(|n| n.active)
        .fold((0.0, 0usize), |(s, c), n| {
            let scaled = n.range / side;
            (s + scaled * scaled, c + 1)
        });
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PairStats {
    /// Linked observations, excluding the current linked run.
    present: u64,
    changes: u64,
    /// Observation index at which the current linked run started.
    since: u64,
}

/// Running state for `tau = 1/(s M) * sum_ij P_ij / Q_ij`.
///
/// `P_ij` counts observations with the pair linked, `Q_ij` counts
/// observations where the link value differs from the previous one (the
/// first formation counts). Pairs that were never linked contribute 0.
#[derive(Debug, Clone)]
pub struct TauAccumulator {
    n: usize,
    previous: Adjacency,
    pairs: Vec<PairStats>,
    steps: u64,
    potential_links: f64,
    /// Sum of P/Q over all pairs as of the last observation.
    ratio_sum: f64,
    /// Sum of 1/Q over currently linked pairs.
    linked_rate: f64,
}

impl TauAccumulator {
    pub fn new(n: usize) -> Self {
        TauAccumulator {
            n,
            previous: Adjacency::new(n),
            pairs: vec![PairStats::default(); n * n],
            steps: 0,
            potential_links: (n * n.saturating_sub(1) / 2) as f64,
            ratio_sum: 0.0,
            linked_rate: 0.0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn potential_links(&self) -> f64 {
        self.potential_links
    }

    /// Records one observation of the committed adjacency.
    pub fn update(&mut self, adjacency: &Adjacency) {
        assert_eq!(adjacency.len(), self.n, "adjacency size changed");
        self.steps += 1;
        let s = self.steps;
        let mut toggled = false;
        let words = adjacency.words_per_row();
        let mut diff = vec![0u64; words];
        for i in 0..self.n {
            let mut any = 0;
            for (w, (a, b)) in adjacency.row(i).iter().zip(self.previous.row(i)).enumerate() {
                diff[w] = a ^ b;
                any |= diff[w];
            }
            if any == 0 {
                continue;
            }
            for j in set_bits(&diff).filter(|&j| j > i) {
                toggled = true;
                let stats = &mut self.pairs[i * self.n + j];
                let q = stats.changes as f64;
                if adjacency.contains(i, j) {
                    if stats.changes > 0 {
                        let p = stats.present as f64;
                        self.ratio_sum += p / (q + 1.0) - p / q;
                    }
                    stats.since = s;
                } else {
                    stats.present += s - stats.since;
                    let p = stats.present as f64;
                    self.ratio_sum += p / (q + 1.0) - p / q;
                }
                stats.changes += 1;
            }
        }
        if toggled {
            self.previous = adjacency.clone();
            self.linked_rate = adjacency
                .edges()
                .map(|(i, j)| 1.0 / self.pairs[i * self.n + j].changes as f64)
                .sum();
        }
        self.ratio_sum += self.linked_rate;
    }

    pub fn tau(&self) -> f64 {
        if self.steps == 0 || self.potential_links == 0.0 {
            return 0.0;
        }
        self.ratio_sum / (self.steps as f64 * self.potential_links)
    }
}

/// Convenience wrapper matching the functional form.
pub fn tau_update(mut acc: TauAccumulator, state: &NetworkState) -> TauAccumulator {
    acc.update(&state.adjacency);
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub cost: f64,
    pub connectivity: f64,
    pub range2_mean: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSeries {
    pub records: Vec<MetricsRecord>,
}

impl MetricsSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&MetricsRecord> {
        self.records.last()
    }

    /// Trailing `fraction` of the records (at least one when non-empty).
    pub fn tail(&self, fraction: f64) -> &[MetricsRecord] {
        let n = self.records.len();
        let keep = ((n as f64 * fraction).ceil() as usize).clamp(n.min(1), n);
        &self.records[n - keep..]
    }

    pub fn connectivity(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.connectivity).collect()
    }

    /// First step from which connectivity stays `>= threshold` for `window`
    /// consecutive records.
    pub fn first_sustained_step(&self, threshold: f64, window: usize) -> Option<u64> {
        let mut run = 0;
        for (idx, r) in self.records.iter().enumerate() {
            if r.connectivity >= threshold {
                run += 1;
                if run >= window {
                    return Some(self.records[idx + 1 - window].step);
                }
            } else {
                run = 0;
            }
        }
        None
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Pointwise mean of equally long series.
pub fn ensemble_average(runs: &[MetricsSeries]) -> Result<MetricsSeries> {
    let first = runs
        .first()
        .ok_or_else(|| TopoError::Config("ensemble average of zero runs".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(TopoError::Config("ensemble series have different lengths".into()));
    }
    let count = runs.len() as f64;
    let records = (0..first.len())
        .map(|t| {
            let mut acc = MetricsRecord {
                step: first.records[t].step,
                cost: 0.0,
                connectivity: 0.0,
                range2_mean: 0.0,
                tau: 0.0,
            };
            for run in runs {
                let r = &run.records[t];
                acc.cost += r.cost;
                acc.connectivity += r.connectivity;
                acc.range2_mean += r.range2_mean;
                acc.tau += r.tau;
            }
            acc.cost /= count;
            acc.connectivity /= count;
            acc.range2_mean /= count;
            acc.tau /= count;
            acc
        })
        .collect();
    Ok(MetricsSeries { records })
}
