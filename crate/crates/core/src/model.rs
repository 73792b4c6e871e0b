//! Spatial network state: node positions, transmission ranges, temperatures
//! and the symmetric adjacency built from mutual range coverage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TopoError};

/// Coordinates are stored as 3-vectors; 2D networks keep `z = 0`.
pub type Position = [f64; 3];

/// Base-range multipliers of the three device categories.
pub const CATEGORY_MULTIPLIERS: [f64; 3] = [0.8, 1.0, 1.2];

/// Standard deviation of the build-time range offset, as a fraction of the base range.
pub const RANGE_OFFSET_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn axes(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_axes(axes: usize) -> Result<Self> {
        match axes {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            other => Err(TopoError::Config(format!("dimension must be 2 or 3, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Reflecting,
}

/// Square (or cubic) simulation domain `[0, L]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSpec {
    pub dimension: Dimension,
    pub side: f64,
    pub boundary: Boundary,
}

impl SpaceSpec {
    /// Domain whose measure is `N / density`.
    pub fn from_density(nodes: usize, density: f64, dimension: Dimension) -> Result<Self> {
        if !density.is_finite() || density <= 0.0 {
            return Err(TopoError::Config(format!("density must be positive, got {density}")));
        }
        if nodes < 2 {
            return Err(TopoError::Config(format!("need at least 2 nodes, got {nodes}")));
        }
        let measure = nodes as f64 / density;
        let side = measure.powf(1.0 / dimension.axes() as f64);
        Ok(SpaceSpec {
            dimension,
            side,
            boundary: Boundary::Reflecting,
        })
    }

    /// Area (2D) or volume (3D).
    pub fn measure(&self) -> f64 {
        self.side.powi(self.dimension.axes() as i32)
    }

    pub fn contains(&self, p: &Position) -> bool {
        p[..self.dimension.axes()]
            .iter()
            .all(|&x| (0.0..=self.side).contains(&x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Small,
    Standard,
    Large,
}

impl Category {
    /// Round-robin assignment by node id.
    pub fn for_id(id: usize) -> Self {
        match id % 3 {
            0 => Category::Small,
            1 => Category::Standard,
            _ => Category::Large,
        }
    }

    pub fn multiplier(self) -> f64 {
        match self {
            Category::Small => CATEGORY_MULTIPLIERS[0],
            Category::Standard => CATEGORY_MULTIPLIERS[1],
            Category::Large => CATEGORY_MULTIPLIERS[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Position,
    pub range: f64,
    pub temperature: f64,
    pub category: Category,
    pub active: bool,
}

/// Dense symmetric adjacency stored as one bitset row per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Adjacency {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Sets or clears the undirected link `{i, j}`. Self-links are ignored.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, linked: bool) {
        if i == j {
            return;
        }
        self.set_half(i, j, linked);
        self.set_half(j, i, linked);
    }

    #[inline]
    fn set_half(&mut self, i: usize, j: usize, linked: bool) {
        let w = &mut self.bits[i * self.words + j / 64];
        let mask = 1u64 << (j % 64);
        if linked {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        set_bits(self.row(i))
    }

    pub fn clear_node(&mut self, i: usize) {
        let neighbors: Vec<usize> = self.neighbors(i).collect();
        for j in neighbors {
            self.set(i, j, false);
        }
    }

    pub fn link_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }
}

/// Indices of set bits across a slice of words.
pub(crate) fn set_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut rest = w;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(wi * 64 + b)
        })
    })
}

/// How node temperatures are assigned at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureSpec {
    Fixed(f64),
    Uniform { low: f64, high: f64 },
}

/// Everything needed to lay out an initial network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub nodes: usize,
    pub density: f64,
    pub dimension: Dimension,
    /// Base transmission range as a fraction of the side length.
    pub base_range_fraction: f64,
    pub temperature: TemperatureSpec,
}

impl NetworkSpec {
    pub fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::from_density(self.nodes, self.density, self.dimension)
    }
}

/// Full simulation state. `distances` caches the pairwise Euclidean
/// distances and must be refreshed whenever positions change.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub space: SpaceSpec,
    pub nodes: Vec<Node>,
    pub adjacency: Adjacency,
    pub base_range: f64,
    distances: Vec<f64>,
}

impl NetworkState {
    /// Wraps pre-placed nodes and links every in-range pair.
    pub fn from_nodes(space: SpaceSpec, nodes: Vec<Node>, base_range: f64) -> Self {
        let n = nodes.len();
        let mut state = NetworkState {
            space,
            nodes,
            adjacency: Adjacency::new(n),
            base_range,
            distances: vec![0.0; n * n],
        };
        state.refresh_distances();
        state.rebuild_links();
        state
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.nodes.len() + j]
    }

    pub fn refresh_distances(&mut self) {
        let n = self.nodes.len();
        let axes = self.space.dimension.axes();
        for i in 0..n {
            self.distances[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let d = euclidean_distance(&self.nodes[i].position[..axes], &self.nodes[j].position[..axes]);
                self.distances[i * n + j] = d;
                self.distances[j * n + i] = d;
            }
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.degree(i)
    }

    /// Mutual-coverage test for the pair with node `i` at a hypothetical range.
    #[inline]
    pub fn in_range_with(&self, i: usize, range_i: f64, j: usize) -> bool {
        i != j
            && self.nodes[i].active
            && self.nodes[j].active
            && self.distance(i, j) <= range_i.min(self.nodes[j].range)
    }

    #[inline]
    pub fn in_range(&self, i: usize, j: usize) -> bool {
        self.in_range_with(i, self.nodes[i].range, j)
    }

    /// Resets the adjacency to exactly the in-range pairs.
    pub fn rebuild_links(&mut self) {
        let n = self.nodes.len();
        self.adjacency = Adjacency::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if self.in_range(i, j) {
                    self.adjacency.set(i, j, true);
                }
            }
        }
    }

    /// Links `i` to every in-range active peer without touching other pairs.
    pub fn link_node_geometric(&mut self, i: usize) {
        for j in 0..self.nodes.len() {
            if self.in_range(i, j) {
                self.adjacency.set(i, j, true);
            }
        }
    }

    pub fn active_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.active).count()
    }

    /// Takes node `i` out of the network: zero range, no links.
    pub fn deactivate(&mut self, i: usize) {
        self.nodes[i].active = false;
        self.nodes[i].range = 0.0;
        self.adjacency.clear_node(i);
    }

    /// First violated structural invariant, if any.
    pub fn consistency_violation(&self) -> Option<String> {
        let n = self.nodes.len();
        for i in 0..n {
            if self.adjacency.contains(i, i) {
                return Some(format!("self-link on {i}"));
            }
            let node = &self.nodes[i];
            if node.range.is_nan() || node.range < 0.0 {
                return Some(format!("negative range on {i}: {}", node.range));
            }
            if !self.space.contains(&node.position) {
                return Some(format!("node {i} outside domain: {:?}", node.position));
            }
            if !node.active && (node.range != 0.0 || self.degree(i) != 0) {
                return Some(format!("inactive node {i} still has range or links"));
            }
            for j in 0..n {
                if self.adjacency.contains(i, j) != self.adjacency.contains(j, i) {
                    return Some(format!("asymmetric pair ({i}, {j})"));
                }
            }
        }
        None
    }

    /// First linked pair that is no longer mutually in range, if any.
    pub fn stale_link(&self) -> Option<(usize, usize)> {
        self.adjacency.edges().find(|&(i, j)| !self.in_range(i, j))
    }
}

/// Euclidean norm of `a - b`. Panics on dimension mismatch.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "coordinate dimension mismatch");
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Bidirectional link rule: both nodes active and `d <= min(r_i, r_j)`.
pub fn centralized_link_predicate(a: &Node, b: &Node, axes: usize) -> bool {
    a.id != b.id
        && a.active
        && b.active
        && euclidean_distance(&a.position[..axes], &b.position[..axes]) <= a.range.min(b.range)
}

/// Build-time range draw: category-scaled base plus a normal offset, clamped at zero.
pub fn draw_range<R: Rng + ?Sized>(base: f64, category: Category, rng: &mut R) -> f64 {
    let offset = if base > 0.0 {
        Normal::new(0.0, RANGE_OFFSET_FRACTION * base)
            .expect("finite sigma")
            .sample(rng)
    } else {
        0.0
    };
    (base * category.multiplier() + offset).max(0.0)
}

pub fn build_initial_network(spec: &NetworkSpec, seed: u64) -> Result<NetworkState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_network_with(spec, &mut rng)
}

/// Uniform placement in `[0, L]^dim` followed by range and temperature draws.
pub fn build_network_with<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Result<NetworkState> {
    let space = spec.space()?;
    let axes = space.dimension.axes();
    let base_range = spec.base_range_fraction * space.side;
    if base_range.is_nan() || base_range < 0.0 {
        return Err(TopoError::Config(format!(
            "base range fraction must be non-negative, got {}",
            spec.base_range_fraction
        )));
    }

    let mut nodes = Vec::with_capacity(spec.nodes);
    for id in 0..spec.nodes {
        let mut position = [0.0; 3];
        for x in position.iter_mut().take(axes) {
            *x = rng.random::<f64>() * space.side;
        }
        let category = Category::for_id(id);
        let range = draw_range(base_range, category, rng);
        let temperature = match spec.temperature {
            TemperatureSpec::Fixed(t) => t,
            TemperatureSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        };
        nodes.push(Node {
            id,
            position,
            range,
            temperature,
            category,
            active: true,
        });
    }
    Ok(NetworkState::from_nodes(space, nodes, base_range))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn node_at(id: usize, x: f64, y: f64, range: f64) -> Node {
        Node {
            id,
            position: [x, y, 0.0],
            range,
            temperature: 0.0,
            category: Category::for_id(id),
            active: true,
        }
    }

    pub(crate) fn square(side: f64) -> SpaceSpec {
        SpaceSpec {
            dimension: Dimension::Two,
            side,
            boundary: Boundary::Reflecting,
        }
    }

    fn spec(nodes: usize, density: f64, dimension: Dimension) -> NetworkSpec {
        NetworkSpec {
            nodes,
            density,
            dimension,
            base_range_fraction: 0.05,
            temperature: TemperatureSpec::Fixed(100.0),
        }
    }

    #[test]
    fn side_length_from_density() {
        let s = SpaceSpec::from_density(100, 0.05, Dimension::Two).unwrap();
        assert!((s.side - 44.721_359_549_995_796).abs() < 1e-9);
        let s3 = SpaceSpec::from_density(100, 0.05, Dimension::Three).unwrap();
        assert!((s3.measure() - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(SpaceSpec::from_density(100, 0.0, Dimension::Two).is_err());
        assert!(SpaceSpec::from_density(100, -1.0, Dimension::Two).is_err());
        assert!(SpaceSpec::from_density(1, 0.05, Dimension::Two).is_err());
        assert!(Dimension::from_axes(4).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        assert_eq!(euclidean_distance(&[1.5, -2.0], &[1.5, -2.0]), 0.0);
        let d = euclidean_distance(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert!((d - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn distance_dimension_mismatch_panics() {
        euclidean_distance(&[0.0, 0.0], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn link_predicate_uses_min_range() {
        let a = node_at(0, 0.0, 0.0, 2.0);
        let b = node_at(1, 1.0, 0.0, 0.5);
        assert!(!centralized_link_predicate(&a, &b, 2));
        let b = node_at(1, 1.0, 0.0, 1.0);
        let a = node_at(0, 0.0, 0.0, 1.0);
        assert!(centralized_link_predicate(&a, &b, 2));
        let mut b = b;
        b.active = false;
        assert!(!centralized_link_predicate(&a, &b, 2));
    }

    #[test]
    fn zero_ranges_link_nothing() {
        let nodes = vec![node_at(0, 1.0, 1.0, 0.0), node_at(1, 1.0, 1.0 + 1e-9, 0.0)];
        let state = NetworkState::from_nodes(square(10.0), nodes, 0.0);
        assert_eq!(state.adjacency.link_count(), 0);
    }

    #[test]
    fn degree_examples() {
        let empty = Adjacency::new(4);
        assert_eq!(empty.degree(2), 0);

        let mut complete = Adjacency::new(5);
        for i in 0..5 {
            for j in 0..5 {
                complete.set(i, j, true);
            }
        }
        assert!((0..5).all(|i| complete.degree(i) == 4));

        let mut star = Adjacency::new(6);
        for j in 1..6 {
            star.set(0, j, true);
        }
        assert_eq!(star.degree(0), 5);
        assert_eq!(star.link_count(), 5);
    }

    #[test]
    fn bitset_spans_multiple_words() {
        let mut a = Adjacency::new(130);
        a.set(3, 129, true);
        a.set(64, 65, true);
        assert!(a.contains(129, 3));
        assert_eq!(a.neighbors(3).collect::<Vec<_>>(), vec![129]);
        assert_eq!(a.edges().collect::<Vec<_>>(), vec![(3, 129), (64, 65)]);
        a.clear_node(129);
        assert_eq!(a.link_count(), 1);
    }

    #[test]
    fn build_is_reproducible_and_in_domain() {
        for dim in [Dimension::Two, Dimension::Three] {
            let s = spec(100, 0.05, dim);
            let a = build_initial_network(&s, 7).unwrap();
            let b = build_initial_network(&s, 7).unwrap();
            assert_eq!(a, b);
            assert!(a.consistency_violation().is_none());
            assert!(a.stale_link().is_none());
            let degree_sum: usize = (0..a.len()).map(|i| a.degree(i)).sum();
            assert_eq!(degree_sum, 2 * a.adjacency.link_count());
        }
        let c = build_initial_network(&spec(100, 0.05, Dimension::Two), 8).unwrap();
        let a = build_initial_network(&spec(100, 0.05, Dimension::Two), 7).unwrap();
        assert_ne!(a.nodes[0].position, c.nodes[0].position);
    }

    #[test]
    fn build_ranges_center_on_category_base() {
        let s = spec(3000, 0.05, Dimension::Two);
        let state = build_initial_network(&s, 1).unwrap();
        let base = 0.05 * state.space.side;
        assert!((state.base_range - base).abs() < 1e-12);
        for (cat, mult) in [(0, 0.8), (1, 1.0), (2, 1.2)] {
            let rs: Vec<f64> = state
                .nodes
                .iter()
                .filter(|n| n.id % 3 == cat)
                .map(|n| n.range)
                .collect();
            let mean = rs.iter().sum::<f64>() / rs.len() as f64;
            assert!((mean / base - mult).abs() < 0.03, "category {cat}: {mean}");
        }
    }

    #[test]
    fn build_rejects_bad_density() {
        assert!(build_initial_network(&spec(100, 0.0, Dimension::Two), 1).is_err());
        assert!(build_initial_network(&spec(1, 0.05, Dimension::Two), 1).is_err());
    }
}
