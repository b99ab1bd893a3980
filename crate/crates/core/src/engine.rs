//! Discrete-event core.
//!
//! Executes three families of renewal streams against a ring topology: the
//! source generation process, one Poisson delivery stream per node, and one
//! gossip stream per directed edge. Gossip is push-based: at each edge
//! arrival the edge's source node transmits its current version and the
//! receiver keeps it only if it is strictly fresher. A source delivery always
//! replaces the receiver's version with the latest one, dropping its age to
//! zero.
//!
//! Events are totally ordered by (time, priority class, enqueue sequence)
//! with SourceGenerate < SourceDeliver < EdgeFire, so runs with deterministic
//! laws — where ties are real — stay reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{build_ring, RingConfig, RingTopology};
use crate::renewal::RenewalStream;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The source mints a new version.
    SourceGenerate,
    /// The source delivers its current version to `node`.
    SourceDeliver { node: usize },
    /// The gossip stream on `edges()[edge]` fires a push.
    EdgeFire { edge: usize },
}

impl EventKind {
    fn priority_class(&self) -> u8 {
        match self {
            EventKind::SourceGenerate => 0,
            EventKind::SourceDeliver { .. } => 1,
            EventKind::EdgeFire { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub seq: u64,
}

/// Heap entry ordered ascending by (time, class, seq).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued(Event);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .time
            .total_cmp(&other.0.time)
            .then_with(|| self.0.kind.priority_class().cmp(&other.0.kind.priority_class()))
            .then_with(|| self.0.seq.cmp(&other.0.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Where a node's current version came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    /// When the version was generated at the source.
    pub gen_time: f64,
    /// The node at which this version entered the ring from the source.
    pub entry_node: usize,
    /// Gossip hops traversed since entry; 0 means received from the source.
    pub hops: u32,
    /// When this node accepted the version.
    pub accept_time: f64,
}

/// A node's current version plus provenance; `provenance` is `None` until
/// the node has been updated for the first time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeState {
    pub version: u64,
    pub provenance: Option<Provenance>,
}

/// One accepted update, as reported to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub now: f64,
    pub node: usize,
    pub version: u64,
    pub gen_time: f64,
    pub entry_node: usize,
    pub hops: u32,
    pub from_source: bool,
}

/// Event-stream observer. All hooks default to no-ops.
///
/// For an accepted delivery or push the engine first invokes the specific
/// hook (`on_source_deliver` / `on_edge_fire`) with the acceptance attached,
/// then `on_acceptance`. `on_finish` fires once when a run reaches its
/// horizon.
pub trait Observer {
    fn on_generate(&mut self, _now: f64, _version: u64) {}
    fn on_source_deliver(&mut self, _now: f64, _node: usize, _acc: Option<&Acceptance>) {}
    fn on_edge_fire(&mut self, _now: f64, _src: usize, _dst: usize, _pushed: u64, _acc: Option<&Acceptance>) {}
    fn on_acceptance(&mut self, _acc: &Acceptance) {}
    fn on_finish(&mut self, _now: f64) {}
}

/// Observer that records nothing.
pub struct NullObserver;

impl Observer for NullObserver {}

impl<T: Observer> Observer for Option<T> {
    fn on_generate(&mut self, now: f64, version: u64) {
        if let Some(o) = self {
            o.on_generate(now, version);
        }
    }
    fn on_source_deliver(&mut self, now: f64, node: usize, acc: Option<&Acceptance>) {
        if let Some(o) = self {
            o.on_source_deliver(now, node, acc);
        }
    }
    fn on_edge_fire(&mut self, now: f64, src: usize, dst: usize, pushed: u64, acc: Option<&Acceptance>) {
        if let Some(o) = self {
            o.on_edge_fire(now, src, dst, pushed, acc);
        }
    }
    fn on_acceptance(&mut self, acc: &Acceptance) {
        if let Some(o) = self {
            o.on_acceptance(acc);
        }
    }
    fn on_finish(&mut self, now: f64) {
        if let Some(o) = self {
            o.on_finish(now);
        }
    }
}

macro_rules! tuple_observer {
    ($($name:ident : $ix:tt),+) => {
        impl<$($name: Observer),+> Observer for ($($name,)+) {
            fn on_generate(&mut self, now: f64, version: u64) {
                $(self.$ix.on_generate(now, version);)+
            }
            fn on_source_deliver(&mut self, now: f64, node: usize, acc: Option<&Acceptance>) {
                $(self.$ix.on_source_deliver(now, node, acc);)+
            }
            fn on_edge_fire(&mut self, now: f64, src: usize, dst: usize, pushed: u64, acc: Option<&Acceptance>) {
                $(self.$ix.on_edge_fire(now, src, dst, pushed, acc);)+
            }
            fn on_acceptance(&mut self, acc: &Acceptance) {
                $(self.$ix.on_acceptance(acc);)+
            }
            fn on_finish(&mut self, now: f64) {
                $(self.$ix.on_finish(now);)+
            }
        }
    };
}

tuple_observer!(A: 0, B: 1);
tuple_observer!(A: 0, B: 1, C: 2);

impl<T: Observer + ?Sized> Observer for &mut T {
    fn on_generate(&mut self, now: f64, version: u64) {
        (**self).on_generate(now, version);
    }
    fn on_source_deliver(&mut self, now: f64, node: usize, acc: Option<&Acceptance>) {
        (**self).on_source_deliver(now, node, acc);
    }
    fn on_edge_fire(&mut self, now: f64, src: usize, dst: usize, pushed: u64, acc: Option<&Acceptance>) {
        (**self).on_edge_fire(now, src, dst, pushed, acc);
    }
    fn on_acceptance(&mut self, acc: &Acceptance) {
        (**self).on_acceptance(acc);
    }
    fn on_finish(&mut self, now: f64) {
        (**self).on_finish(now);
    }
}

/// Generation time per version, pruned below the lowest version any node
/// still holds.
#[derive(Debug, Clone, Default)]
struct GenTable {
    /// Versions `1..=base` have been pruned.
    base: u64,
    times: VecDeque<f64>,
}

impl GenTable {
    fn push(&mut self, t: f64) {
        self.times.push_back(t);
    }

    fn latest_version(&self) -> u64 {
        self.base + self.times.len() as u64
    }

    fn time_of(&self, version: u64) -> Option<f64> {
        if version <= self.base || version > self.latest_version() {
            return None;
        }
        Some(self.times[(version - self.base - 1) as usize])
    }

    fn prune_below(&mut self, min_version: u64) {
        while self.base + 1 < min_version && !self.times.is_empty() {
            self.times.pop_front();
            self.base += 1;
        }
    }
}

/// Aggregate counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub generates: u64,
    pub delivers: u64,
    pub edge_fires: u64,
    pub source_accepts: u64,
    pub gossip_accepts: u64,
    pub rejections: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.generates + self.delivers + self.edge_fires
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub horizon: f64,
    pub counts: EventCounts,
    pub final_source_version: u64,
    /// Version age of every node at the horizon.
    pub final_ages: Vec<u64>,
}

/// A single simulation replica: state, streams and the event queue.
/// Strictly single-threaded; replica-level parallelism lives above.
pub struct Simulation {
    topo: RingTopology,
    horizon: f64,
    clock: f64,
    source_version: u64,
    nodes: Vec<NodeState>,
    gen_table: GenTable,
    queue: BinaryHeap<std::cmp::Reverse<Queued>>,
    next_seq: u64,
    source_stream: RenewalStream,
    deliver_streams: Vec<RenewalStream>,
    edge_streams: Vec<RenewalStream>,
    counts: EventCounts,
}

impl Simulation {
    /// Build a replica: topology, seeded streams (one per process, keyed by
    /// process identity), and the initial event per stream.
    pub fn new(config: &RingConfig) -> Result<Self> {
        let topo = build_ring(config)?;
        let seed = config.sim.seed;
        let n = topo.n();

        let source_stream = RenewalStream::new(config.source.gen, derive_seed(seed, "source-gen", &[]))?;
        let delivery_spec = crate::renewal::DistributionSpec::exponential(topo.per_node_source_rate());
        let deliver_streams = (0..n)
            .map(|i| RenewalStream::new(delivery_spec, derive_seed(seed, "source-deliver", &[i as u64])))
            .collect::<Result<Vec<_>>>()?;
        let edge_streams = topo
            .edges()
            .iter()
            .enumerate()
            .map(|(slot_index, e)| {
                // The second block of edges on a bi ring is the backward set.
                let slot = (slot_index >= n) as u64;
                RenewalStream::new(
                    e.spec,
                    derive_seed(seed, "edge", &[e.src as u64, e.dst as u64, slot]),
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut sim = Simulation {
            nodes: vec![NodeState::default(); n],
            horizon: config.sim.horizon,
            clock: 0.0,
            source_version: 0,
            gen_table: GenTable::default(),
            queue: BinaryHeap::with_capacity(1 + n + edge_streams.len()),
            next_seq: 0,
            source_stream,
            deliver_streams,
            edge_streams,
            counts: EventCounts::default(),
            topo,
        };
        let first = sim.source_stream.next_arrival();
        sim.enqueue(first, EventKind::SourceGenerate);
        for i in 0..n {
            let t = sim.deliver_streams[i].next_arrival();
            sim.enqueue(t, EventKind::SourceDeliver { node: i });
        }
        for e in 0..sim.edge_streams.len() {
            let t = sim.edge_streams[e].next_arrival();
            sim.enqueue(t, EventKind::EdgeFire { edge: e });
        }
        Ok(sim)
    }

    fn enqueue(&mut self, time: f64, kind: EventKind) {
        let ev = Event { time, kind, seq: self.next_seq };
        self.next_seq += 1;
        self.queue.push(std::cmp::Reverse(Queued(ev)));
    }

    pub fn topology(&self) -> &RingTopology {
        &self.topo
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn source_version(&self) -> u64 {
        self.source_version
    }

    pub fn node(&self, i: usize) -> &NodeState {
        &self.nodes[i]
    }

    /// Version age of node `i` right now.
    pub fn age(&self, i: usize) -> u64 {
        self.source_version - self.nodes[i].version
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn counts(&self) -> &EventCounts {
        &self.counts
    }

    /// Generation time of `version`, if it has been generated and not pruned.
    pub fn generation_time(&self, version: u64) -> Option<f64> {
        self.gen_table.time_of(version)
    }

    /// Process the next event at or before the horizon. Returns `None` when
    /// the queue is exhausted or the next event lies beyond the horizon.
    pub fn step<O: Observer>(&mut self, obs: &mut O) -> Option<Event> {
        let next_time = self.queue.peek()?.0 .0.time;
        if next_time > self.horizon {
            return None;
        }
        let std::cmp::Reverse(Queued(ev)) = self.queue.pop().unwrap();
        debug_assert!(ev.time >= self.clock, "clock must be non-decreasing");
        self.clock = ev.time;

        match ev.kind {
            EventKind::SourceGenerate => {
                self.source_version += 1;
                self.gen_table.push(ev.time);
                self.counts.generates += 1;
                if self.counts.generates % 4096 == 0 {
                    let min_held = self.nodes.iter().map(|n| n.version).min().unwrap_or(0);
                    self.gen_table.prune_below(min_held);
                }
                obs.on_generate(ev.time, self.source_version);
                let t = self.source_stream.advance();
                self.enqueue(t, EventKind::SourceGenerate);
            }
            EventKind::SourceDeliver { node } => {
                self.counts.delivers += 1;
                // Before the first generation there is no update to deliver.
                if self.source_version > 0 {
                    let version = self.source_version;
                    let gen_time = self
                        .gen_table
                        .time_of(version)
                        .expect("latest version is never pruned");
                    self.nodes[node] = NodeState {
                        version,
                        provenance: Some(Provenance {
                            gen_time,
                            entry_node: node,
                            hops: 0,
                            accept_time: ev.time,
                        }),
                    };
                    self.counts.source_accepts += 1;
                    let acc = Acceptance {
                        now: ev.time,
                        node,
                        version,
                        gen_time,
                        entry_node: node,
                        hops: 0,
                        from_source: true,
                    };
                    obs.on_source_deliver(ev.time, node, Some(&acc));
                    obs.on_acceptance(&acc);
                } else {
                    obs.on_source_deliver(ev.time, node, None);
                }
                let t = self.deliver_streams[node].advance();
                self.enqueue(t, EventKind::SourceDeliver { node });
            }
            EventKind::EdgeFire { edge } => {
                self.counts.edge_fires += 1;
                let (src, dst) = {
                    let e = &self.topo.edges()[edge];
                    (e.src, e.dst)
                };
                let pushed = self.nodes[src].version;
                if pushed > self.nodes[dst].version {
                    let prov = self.nodes[src]
                        .provenance
                        .expect("a node holding a version has provenance");
                    debug_assert!(prov.gen_time <= ev.time);
                    let hops = prov.hops + 1;
                    self.nodes[dst] = NodeState {
                        version: pushed,
                        provenance: Some(Provenance {
                            gen_time: prov.gen_time,
                            entry_node: prov.entry_node,
                            hops,
                            accept_time: ev.time,
                        }),
                    };
                    self.counts.gossip_accepts += 1;
                    let acc = Acceptance {
                        now: ev.time,
                        node: dst,
                        version: pushed,
                        gen_time: prov.gen_time,
                        entry_node: prov.entry_node,
                        hops,
                        from_source: false,
                    };
                    obs.on_edge_fire(ev.time, src, dst, pushed, Some(&acc));
                    obs.on_acceptance(&acc);
                } else {
                    self.counts.rejections += 1;
                    obs.on_edge_fire(ev.time, src, dst, pushed, None);
                }
                let t = self.edge_streams[edge].advance();
                self.enqueue(t, EventKind::EdgeFire { edge });
            }
        }
        debug_assert!(self.nodes.iter().all(|n| n.version <= self.source_version));
        Some(ev)
    }

    /// Run until `horizon`, then flush observers. The clock lands exactly on
    /// the horizon.
    pub fn run_until<O: Observer>(&mut self, horizon: f64, obs: &mut O) -> Result<RunSummary> {
        if horizon < self.clock {
            return Err(Error::domain(format!(
                "horizon {horizon} is before the current clock {}",
                self.clock
            )));
        }
        self.horizon = horizon;
        while self.step(obs).is_some() {}
        self.clock = horizon;
        obs.on_finish(horizon);
        Ok(RunSummary {
            horizon,
            counts: self.counts,
            final_source_version: self.source_version,
            final_ages: (0..self.nodes.len()).map(|i| self.age(i)).collect(),
        })
    }

    /// Run to the configured horizon.
    pub fn run<O: Observer>(&mut self, obs: &mut O) -> RunSummary {
        self.run_until(self.horizon, obs).expect("configured horizon is ahead of a fresh clock")
    }
}

/// Writes one CSV row per event: `time,kind,src,dst,accepted,version,hops`.
/// Source events leave `src` empty; `hops` is filled on acceptances.
pub struct TraceWriter<W: std::io::Write> {
    out: W,
    err: Option<std::io::Error>,
}

impl<W: std::io::Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Self {
        let err = writeln!(out, "time,kind,src,dst,accepted,version,hops").err();
        TraceWriter { out, err }
    }

    fn row(&mut self, args: std::fmt::Arguments<'_>) {
        if self.err.is_none() {
            self.err = self.out.write_fmt(args).err();
        }
    }

    /// Release the writer, surfacing any deferred IO error.
    pub fn into_inner(self) -> std::io::Result<W> {
        match self.err {
            Some(e) => Err(e),
            None => Ok(self.out),
        }
    }
}

impl<W: std::io::Write> Observer for TraceWriter<W> {
    fn on_generate(&mut self, now: f64, version: u64) {
        self.row(format_args!("{now},generate,,,true,{version},\n"));
    }
    fn on_source_deliver(&mut self, now: f64, node: usize, acc: Option<&Acceptance>) {
        match acc {
            Some(a) => self.row(format_args!("{now},deliver,,{node},true,{},0\n", a.version)),
            None => self.row(format_args!("{now},deliver,,{node},false,,\n")),
        }
    }
    fn on_edge_fire(&mut self, now: f64, src: usize, dst: usize, pushed: u64, acc: Option<&Acceptance>) {
        match acc {
            Some(a) => self.row(format_args!(
                "{now},gossip,{src},{dst},true,{pushed},{}\n",
                a.hops
            )),
            None => self.row(format_args!("{now},gossip,{src},{dst},false,{pushed},\n")),
        }
    }
}
