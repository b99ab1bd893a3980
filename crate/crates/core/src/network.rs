//! Ring topologies and experiment configuration.
//!
//! A ring of `n` nodes carries one directed gossip edge per neighbor pair
//! (uni-directional) or two (bi-directional), each edge with its own
//! inter-arrival law. The source delivers directly to every node as a
//! Poisson process with per-node rate `lambda_s / n`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renewal::DistributionSpec;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uni,
    Bi,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Uni => write!(f, "uni"),
            Direction::Bi => write!(f, "bi"),
        }
    }
}

/// When age observation of a tracked node begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BurnIn {
    /// Observe from the node's first accepted update; age mass before that
    /// instant is excluded.
    #[default]
    FirstAcceptance,
    /// Observe from time zero.
    FromStart,
}

/// Assignment of inter-arrival laws to gossip edges.
///
/// Heterogeneous assignments are pure functions of (src, dst, seed):
/// rebuilding a topology from the same configuration reproduces identical
/// per-edge laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgeLaw {
    /// One law on every edge.
    Homogeneous { spec: DistributionSpec },
    /// Cycle through a list of laws by canonical edge index.
    Cycle { specs: Vec<DistributionSpec> },
    /// Exponential edges with rates drawn per edge, uniformly from
    /// `[rate_lo, rate_hi]`, keyed by the master seed.
    JitterExpRate { rate_lo: f64, rate_hi: f64 },
}

impl EdgeLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            EdgeLaw::Homogeneous { spec } => spec.validate(),
            EdgeLaw::Cycle { specs } => {
                if specs.is_empty() {
                    return Err(Error::config("edge law cycle needs at least one spec"));
                }
                specs.iter().try_for_each(|s| s.validate())
            }
            EdgeLaw::JitterExpRate { rate_lo, rate_hi } => {
                if !(*rate_lo > 0.0) || !(rate_hi >= rate_lo) || !rate_hi.is_finite() {
                    return Err(Error::config(format!(
                        "jitter_exp_rate requires 0 < rate_lo <= rate_hi, got [{rate_lo}, {rate_hi}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The law for the edge `src -> dst`. `slot` disambiguates the two
    /// parallel directions on the two-node bi-directional ring; `index` is
    /// the canonical position in the edge list.
    fn spec_for(&self, src: usize, dst: usize, slot: u64, index: usize, seed: u64) -> DistributionSpec {
        match self {
            EdgeLaw::Homogeneous { spec } => *spec,
            EdgeLaw::Cycle { specs } => specs[index % specs.len()],
            EdgeLaw::JitterExpRate { rate_lo, rate_hi } => {
                let mut rng = seed::derive_rng(seed, "edge-law", &[src as u64, dst as u64, slot]);
                let u: f64 = rand::Rng::gen_range(&mut rng, 0.0..=1.0);
                DistributionSpec::exponential(rate_lo + u * (rate_hi - rate_lo))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    pub n: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Total dissemination rate; each node is delivered to at rate `lambda_s / n`.
    pub lambda_s: f64,
    /// Law of the source's update generation process.
    pub gen: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub burn_in: BurnIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSection {
    pub nodes: Vec<usize>,
}

/// Full description of one simulation replica.
///
/// Serializes as the canonical configuration file with sections
/// `{ring, source, edges, sim, track}`. The `track` section is optional and
/// defaults to node 1 (node 0 on a single-node ring).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingConfig {
    pub ring: RingSection,
    pub source: SourceSection,
    pub edges: EdgeLaw,
    pub sim: SimSection,
    pub track: TrackSection,
}

impl<'de> Deserialize<'de> for RingConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            ring: RingSection,
            source: SourceSection,
            edges: EdgeLaw,
            sim: SimSection,
            track: Option<TrackSection>,
        }
        let file = File::deserialize(deserializer)?;
        let track = file.track.unwrap_or_else(|| TrackSection {
            nodes: vec![RingConfig::default_tracked_node(file.ring.n)],
        });
        Ok(RingConfig {
            ring: file.ring,
            source: file.source,
            edges: file.edges,
            sim: file.sim,
            track,
        })
    }
}

impl RingConfig {
    /// Baseline configuration: exponential(1) source and edges, `lambda_s = 1`,
    /// horizon 1000, seed 0, tracking node 1 (node 0 when `n == 1`).
    pub fn new(n: usize, direction: Direction) -> Self {
        RingConfig {
            ring: RingSection { n, direction },
            source: SourceSection {
                lambda_s: 1.0,
                gen: DistributionSpec::exponential(1.0),
            },
            edges: EdgeLaw::Homogeneous {
                spec: DistributionSpec::exponential(1.0),
            },
            sim: SimSection {
                horizon: 1000.0,
                seed: 0,
                burn_in: BurnIn::FirstAcceptance,
            },
            track: TrackSection {
                nodes: vec![Self::default_tracked_node(n)],
            },
        }
    }

    pub fn default_tracked_node(n: usize) -> usize {
        usize::from(n > 1)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        let was_default = self.track.nodes == vec![Self::default_tracked_node(self.ring.n)];
        self.ring.n = n;
        if was_default {
            self.track.nodes = vec![Self::default_tracked_node(n)];
        }
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.ring.direction = direction;
        self
    }

    pub fn with_lambda_s(mut self, lambda_s: f64) -> Self {
        self.source.lambda_s = lambda_s;
        self
    }

    pub fn with_source_gen(mut self, gen: DistributionSpec) -> Self {
        self.source.gen = gen;
        self
    }

    pub fn with_edges(mut self, edges: EdgeLaw) -> Self {
        self.edges = edges;
        self
    }

    pub fn with_edge_spec(self, spec: DistributionSpec) -> Self {
        self.with_edges(EdgeLaw::Homogeneous { spec })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.sim.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }

    pub fn with_burn_in(mut self, burn_in: BurnIn) -> Self {
        self.sim.burn_in = burn_in;
        self
    }

    pub fn with_tracked(mut self, nodes: Vec<usize>) -> Self {
        self.track.nodes = nodes;
        self
    }

    pub fn n(&self) -> usize {
        self.ring.n
    }

    pub fn direction(&self) -> Direction {
        self.ring.direction
    }

    pub fn validate(&self) -> Result<()> {
        if self.ring.n < 1 {
            return Err(Error::config("ring needs at least one node"));
        }
        if !(self.source.lambda_s > 0.0) || !self.source.lambda_s.is_finite() {
            return Err(Error::config(format!(
                "lambda_s must be positive, got {}",
                self.source.lambda_s
            )));
        }
        if !(self.sim.horizon > 0.0) || !self.sim.horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {}",
                self.sim.horizon
            )));
        }
        self.source.gen.validate()?;
        self.edges.validate()?;
        for &node in &self.track.nodes {
            if node >= self.ring.n {
                return Err(Error::config(format!(
                    "tracked node {node} out of range for n={}",
                    self.ring.n
                )));
            }
        }
        Ok(())
    }
}

/// One directed gossip edge with its assigned law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub spec: DistributionSpec,
}

/// Immutable ring topology; safe to share read-only across replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct RingTopology {
    n: usize,
    direction: Direction,
    edges: Vec<Edge>,
    per_node_source_rate: f64,
}

/// Construct the topology described by `config`.
///
/// Uni-directional rings have edges `(i, i+1 mod n)`; bi-directional rings add
/// `(i, i-1 mod n)`. Self-loops are excluded, so `n = 1` yields a source-only
/// network. On the two-node bi-directional ring the two directions produce
/// parallel edges with independent processes.
pub fn build_ring(config: &RingConfig) -> Result<RingTopology> {
    config.validate()?;
    let n = config.ring.n;
    let seed = config.sim.seed;
    let mut edges = Vec::new();
    if n > 1 {
        for i in 0..n {
            let dst = (i + 1) % n;
            let spec = config.edges.spec_for(i, dst, 0, edges.len(), seed);
            edges.push(Edge { src: i, dst, spec });
        }
        if config.ring.direction == Direction::Bi {
            for i in 0..n {
                let dst = (i + n - 1) % n;
                let spec = config.edges.spec_for(i, dst, 1, edges.len(), seed);
                edges.push(Edge { src: i, dst, spec });
            }
        }
    }
    Ok(RingTopology {
        n,
        direction: config.ring.direction,
        edges,
        per_node_source_rate: config.source.lambda_s / n as f64,
    })
}

impl RingTopology {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn per_node_source_rate(&self) -> f64 {
        self.per_node_source_rate
    }

    /// Largest valid window parameter k for [`upstream_window`].
    pub fn max_window_k(&self) -> usize {
        match self.direction {
            Direction::Uni => self.n.saturating_sub(1),
            Direction::Bi => self.n.saturating_sub(1) / 2,
        }
    }

    /// Directed hop count from `from` to `to` along increasing indices.
    pub fn clockwise_distance(&self, from: usize, to: usize) -> usize {
        (to + self.n - from) % self.n
    }

    /// Shortest hop count from `from` to `to` along allowed directions.
    pub fn hop_distance(&self, from: usize, to: usize) -> usize {
        let cw = self.clockwise_distance(from, to);
        match self.direction {
            Direction::Uni => cw,
            Direction::Bi => cw.min(self.n - cw),
        }
    }
}

/// The spatial window V_k around a tracked node.
///
/// Uni-directional: the k consecutive upstream nodes immediately before
/// `target` (hop distance 1..=k to the target). Bi-directional: the k nearest
/// nodes on each side, 2k in total; k is limited to `(n-1)/2` so the two
/// sides cannot overlap.
pub fn upstream_window(topo: &RingTopology, target: usize, k: usize) -> Result<BTreeSet<usize>> {
    let n = topo.n;
    if target >= n {
        return Err(Error::domain(format!("target {target} out of range for n={n}")));
    }
    if k < 1 || k > topo.max_window_k() {
        return Err(Error::domain(format!(
            "window k={k} out of range 1..={} for n={n} {}",
            topo.max_window_k(),
            topo.direction
        )));
    }
    let mut set = BTreeSet::new();
    for d in 1..=k {
        set.insert((target + n - d) % n);
        if topo.direction == Direction::Bi {
            set.insert((target + d) % n);
        }
    }
    Ok(set)
}

/// Signed hop offset of `entry` relative to `target`.
///
/// Uni-directional: the upstream distance (how many hops the update must
/// travel to reach the target), always non-negative. Bi-directional: the
/// nearest-side distance, positive when the entry lies in the direction of
/// increasing index. Source-direct entries (`entry == target`) are offset 0.
pub fn entry_offset(n: usize, direction: Direction, target: usize, entry: usize) -> i64 {
    let cw_from_target = ((entry + n - target) % n) as i64; // hops target -> entry, increasing
    match direction {
        Direction::Uni => (n as i64 - cw_from_target) % n as i64,
        Direction::Bi => {
            if 2 * cw_from_target <= n as i64 {
                cw_from_target
            } else {
                cw_from_target - n as i64
            }
        }
    }
}
