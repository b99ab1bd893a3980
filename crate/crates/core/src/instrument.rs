//! Sample-path instrumentation.
//!
//! An [`AgeAccumulator`] attaches to a simulation as an observer and, for
//! each tracked node, maintains the node's version age from event
//! notifications alone: it counts source generations itself and drops the
//! age on acceptances, so its view is an independent mirror of the engine's
//! version arithmetic. Every acceptance at a tracked node yields a
//! [`TransitRecord`] capturing the backtracking observables: transit time,
//! inter-arrival gap, entry offset, hop count, and the age peak/valley
//! around the acceptance.

use rand::Rng;
use serde::Serialize;

use crate::engine::{Acceptance, Observer};
use crate::error::{Error, Result};
use crate::network::{entry_offset, BurnIn, Direction, RingConfig, RingTopology};
use crate::seed::derive_rng;

/// One accepted update at a tracked node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitRecord {
    pub node: usize,
    pub version: u64,
    /// accept_time − gen_time.
    pub transit: f64,
    /// Gap since the previous acceptance at this node; `None` for the first.
    pub inter_arrival: Option<f64>,
    /// Signed hop offset of the entry node relative to the tracked node
    /// (see [`entry_offset`]); 0 for source-direct receptions.
    pub entry_offset: i64,
    /// Hops traversed from the entry node; 0 means direct from the source.
    pub hops: u32,
    pub from_source: bool,
    /// Age immediately before the acceptance.
    pub peak_age: u64,
    /// Age immediately after the acceptance: the number of source
    /// generations during the update's transit window.
    pub valley_age: u64,
}

/// Streaming mean/variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Sample variance (ddof = 1).
    pub fn variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn std_err(&self) -> Option<f64> {
        self.variance().map(|v| (v / self.count as f64).sqrt())
    }
}

/// Record storage with a memory budget: exact list up to `cap`, then a
/// uniform reservoir sample over everything seen.
#[derive(Debug, Clone)]
pub struct RecordStore {
    cap: usize,
    seen: u64,
    items: Vec<TransitRecord>,
    rng: rand_chacha::ChaCha8Rng,
}

impl RecordStore {
    fn new(cap: usize, seed_rng: rand_chacha::ChaCha8Rng) -> Self {
        RecordStore {
            cap: cap.max(1),
            seen: 0,
            items: Vec::new(),
            rng: seed_rng,
        }
    }

    fn push(&mut self, rec: TransitRecord) {
        self.seen += 1;
        if self.items.len() < self.cap {
            self.items.push(rec);
        } else {
            // Algorithm R: keep each seen record with probability cap/seen.
            let j = self.rng.gen_range(0..self.seen);
            if (j as usize) < self.cap {
                self.items[j as usize] = rec;
            }
        }
    }

    /// Total records observed, including ones not retained.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// True while no record has been dropped.
    pub fn is_exact(&self) -> bool {
        self.seen <= self.cap as u64
    }

    pub fn records(&self) -> &[TransitRecord] {
        &self.items
    }
}

/// Per-node streaming summaries kept regardless of the record budget.
#[derive(Debug, Clone, Default, Serialize)]
pub struct NodeStreamStats {
    pub peak: Welford,
    pub valley: Welford,
    pub transit: Welford,
    pub inter_arrival: Welford,
    pub gossip_hops: Welford,
    pub source_accepts: u64,
    pub gossip_accepts: u64,
    /// Gossip acceptances whose hop count exceeds n/2.
    pub long_path_accepts: u64,
}

#[derive(Debug, Clone)]
struct NodeAccum {
    node: usize,
    age: u64,
    observe_from: Option<f64>,
    last_change: f64,
    watermark: f64,
    integral: f64,
    last_accept: Option<f64>,
    store: RecordStore,
    stats: NodeStreamStats,
}

impl NodeAccum {
    fn advance_to(&mut self, now: f64) {
        if self.observe_from.is_some() {
            self.integral += self.age as f64 * (now - self.last_change);
            self.last_change = now;
        }
        self.watermark = now;
    }
}

/// Instrumentation options.
#[derive(Debug, Clone, Copy)]
pub struct InstrumentOptions {
    /// Per-node record budget before switching to reservoir sampling.
    pub record_cap: usize,
    /// Record every source generation time (needed for replay audits).
    pub audit: bool,
    /// Seed for reservoir sampling decisions.
    pub seed: u64,
}

impl Default for InstrumentOptions {
    fn default() -> Self {
        InstrumentOptions {
            record_cap: 1 << 20,
            audit: false,
            seed: 0,
        }
    }
}

/// Tracks version age and transit records for a set of nodes.
pub struct AgeAccumulator {
    n: usize,
    direction: Direction,
    source_count: u64,
    gen_times: Option<Vec<f64>>,
    slots: Vec<NodeAccum>,
}

impl AgeAccumulator {
    pub fn new(
        n: usize,
        direction: Direction,
        burn_in: BurnIn,
        tracked: &[usize],
        opts: InstrumentOptions,
    ) -> Self {
        let slots = tracked
            .iter()
            .map(|&node| NodeAccum {
                node,
                age: 0,
                observe_from: (burn_in == BurnIn::FromStart).then_some(0.0),
                last_change: 0.0,
                watermark: 0.0,
                integral: 0.0,
                last_accept: None,
                store: RecordStore::new(
                    opts.record_cap,
                    derive_rng(opts.seed, "reservoir", &[node as u64]),
                ),
                stats: NodeStreamStats::default(),
            })
            .collect();
        AgeAccumulator {
            n,
            direction,
            source_count: 0,
            gen_times: opts.audit.then(Vec::new),
            slots,
        }
    }

    /// Accumulator matching a configuration's topology, burn-in and tracked set.
    pub fn from_config(config: &RingConfig, opts: InstrumentOptions) -> Self {
        AgeAccumulator::new(
            config.ring.n,
            config.ring.direction,
            config.sim.burn_in,
            &config.track.nodes,
            opts,
        )
    }

    pub fn tracked(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.node).collect()
    }

    fn slot(&self, node: usize) -> Result<&NodeAccum> {
        self.slots
            .iter()
            .find(|s| s.node == node)
            .ok_or_else(|| Error::domain(format!("node {node} is not tracked")))
    }

    /// Time-weighted mean age since observation began for `node`.
    pub fn time_average_age(&self, node: usize) -> Result<f64> {
        let slot = self.slot(node)?;
        let start = slot.observe_from.ok_or(Error::UndefinedAverage(node))?;
        let span = slot.watermark - start;
        if span <= 0.0 {
            return Err(Error::UndefinedAverage(node));
        }
        Ok(slot.integral / span)
    }

    /// Retained records for `node` (exact unless the budget was exceeded).
    pub fn records(&self, node: usize) -> Result<&[TransitRecord]> {
        Ok(self.slot(node)?.store.records())
    }

    pub fn record_store(&self, node: usize) -> Result<&RecordStore> {
        Ok(&self.slot(node)?.store)
    }

    pub fn stream_stats(&self, node: usize) -> Result<&NodeStreamStats> {
        Ok(&self.slot(node)?.stats)
    }

    /// Total acceptances observed at `node`.
    pub fn acceptance_count(&self, node: usize) -> Result<u64> {
        Ok(self.slot(node)?.store.seen())
    }

    pub fn observation_start(&self, node: usize) -> Result<Option<f64>> {
        Ok(self.slot(node)?.observe_from)
    }

    /// Current age of `node` in the accumulator's mirror of the state.
    pub fn current_age(&self, node: usize) -> Result<u64> {
        Ok(self.slot(node)?.age)
    }

    /// All source generation times, when auditing is enabled.
    pub fn generation_times(&self) -> Option<&[f64]> {
        self.gen_times.as_deref()
    }

    pub fn source_count(&self) -> u64 {
        self.source_count
    }
}

impl Observer for AgeAccumulator {
    fn on_generate(&mut self, now: f64, _version: u64) {
        self.source_count += 1;
        if let Some(times) = &mut self.gen_times {
            times.push(now);
        }
        for slot in &mut self.slots {
            slot.advance_to(now);
            slot.age += 1;
        }
    }

    fn on_acceptance(&mut self, a: &Acceptance) {
        let n = self.n;
        let direction = self.direction;
        let source_count = self.source_count;
        let Some(slot) = self.slots.iter_mut().find(|s| s.node == a.node) else {
            return;
        };
        let peak_age = slot.age;
        slot.advance_to(a.now);
        if slot.observe_from.is_none() {
            slot.observe_from = Some(a.now);
            slot.last_change = a.now;
            slot.integral = 0.0;
        }
        debug_assert!(source_count >= a.version);
        let valley_age = source_count - a.version;
        slot.age = valley_age;

        let rec = TransitRecord {
            node: a.node,
            version: a.version,
            transit: a.now - a.gen_time,
            inter_arrival: slot.last_accept.map(|t| a.now - t),
            entry_offset: entry_offset(n, direction, a.node, a.entry_node),
            hops: a.hops,
            from_source: a.from_source,
            peak_age,
            valley_age,
        };
        debug_assert!(rec.transit > 0.0);
        debug_assert!(rec.peak_age >= rec.valley_age);
        slot.last_accept = Some(a.now);

        slot.stats.peak.push(peak_age as f64);
        slot.stats.valley.push(valley_age as f64);
        slot.stats.transit.push(rec.transit);
        if let Some(gap) = rec.inter_arrival {
            slot.stats.inter_arrival.push(gap);
        }
        if a.from_source {
            slot.stats.source_accepts += 1;
        } else {
            slot.stats.gossip_accepts += 1;
            slot.stats.gossip_hops.push(a.hops as f64);
            if 2 * a.hops as usize > n {
                slot.stats.long_path_accepts += 1;
            }
        }
        slot.store.push(rec);
    }

    fn on_finish(&mut self, now: f64) {
        for slot in &mut self.slots {
            slot.advance_to(now);
        }
    }
}

/// Fraction of records whose entry node lies within the window of size `k`
/// (|entry_offset| ≤ k). Source-direct records have offset 0 and therefore
/// fall inside every window.
pub fn window_fraction(records: &[TransitRecord], k: usize) -> Result<f64> {
    window_fraction_filtered(records, k, true)
}

/// [`window_fraction`] with source-direct records optionally excluded, for
/// studies that concern gossip-delivered updates only.
pub fn window_fraction_filtered(
    records: &[TransitRecord],
    k: usize,
    include_source: bool,
) -> Result<f64> {
    let mut total = 0u64;
    let mut inside = 0u64;
    for r in records {
        if !include_source && r.from_source {
            continue;
        }
        total += 1;
        if r.entry_offset.unsigned_abs() <= k as u64 {
            inside += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData(
            "window fraction needs at least one record".into(),
        ));
    }
    Ok(inside as f64 / total as f64)
}

/// Fraction of gossip-accepted records that traveled more than n/2 hops.
/// Defined only on bi-directional topologies, where a long and a short path
/// exist; on a uni-directional ring the notion is vacuous.
pub fn long_path_fraction(records: &[TransitRecord], topo: &RingTopology) -> Result<f64> {
    if topo.direction() == Direction::Uni {
        return Err(Error::domain(
            "long-path fraction is undefined on a uni-directional ring",
        ));
    }
    let gossip: Vec<&TransitRecord> = records.iter().filter(|r| !r.from_source).collect();
    if gossip.is_empty() {
        return Err(Error::InsufficientData(
            "long-path fraction needs at least one gossip acceptance".into(),
        ));
    }
    let long = gossip
        .iter()
        .filter(|r| 2 * r.hops as usize > topo.n())
        .count();
    Ok(long as f64 / gossip.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakValleyStats {
    pub mean_peak: f64,
    pub mean_valley: f64,
    pub mean_transit: f64,
    pub mean_inter_arrival: f64,
}

/// Arithmetic means of peak, valley, transit and inter-arrival over a record
/// set (source and gossip acceptances alike).
pub fn peak_valley_stats(records: &[TransitRecord]) -> Result<PeakValleyStats> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "peak/valley statistics need at least 2 records, got {}",
            records.len()
        )));
    }
    let n = records.len() as f64;
    let mut gaps = Welford::default();
    for r in records {
        if let Some(g) = r.inter_arrival {
            gaps.push(g);
        }
    }
    Ok(PeakValleyStats {
        mean_peak: records.iter().map(|r| r.peak_age as f64).sum::<f64>() / n,
        mean_valley: records.iter().map(|r| r.valley_age as f64).sum::<f64>() / n,
        mean_transit: records.iter().map(|r| r.transit).sum::<f64>() / n,
        mean_inter_arrival: gaps.mean().unwrap_or(f64::NAN),
    })
}

/// Waiting-time probe: for every acceptance at the tracked node, measures the
/// time until the source next delivers into each configured window.
pub struct WindowWaitProbe {
    tracked: usize,
    windows: Vec<WindowWait>,
}

struct WindowWait {
    k: usize,
    members: Vec<bool>,
    open_since: Vec<f64>,
    samples: Welford,
}

impl WindowWaitProbe {
    /// `windows` maps each k to the node set of V_k around `tracked`.
    pub fn new(n: usize, tracked: usize, windows: Vec<(usize, std::collections::BTreeSet<usize>)>) -> Self {
        WindowWaitProbe {
            tracked,
            windows: windows
                .into_iter()
                .map(|(k, set)| {
                    let mut members = vec![false; n];
                    for node in set {
                        members[node] = true;
                    }
                    WindowWait {
                        k,
                        members,
                        open_since: Vec::new(),
                        samples: Welford::default(),
                    }
                })
                .collect(),
        }
    }

    /// (k, streaming stats of the waiting-time samples) per window.
    pub fn results(&self) -> Vec<(usize, Welford)> {
        self.windows.iter().map(|w| (w.k, w.samples)).collect()
    }
}

impl Observer for WindowWaitProbe {
    fn on_source_deliver(&mut self, now: f64, node: usize, _acc: Option<&Acceptance>) {
        for w in &mut self.windows {
            if w.members[node] {
                for &since in &w.open_since {
                    w.samples.push(now - since);
                }
                w.open_since.clear();
            }
        }
    }

    fn on_acceptance(&mut self, a: &Acceptance) {
        if a.node == self.tracked {
            for w in &mut self.windows {
                w.open_since.push(a.now);
            }
        }
    }
}

/// Write records as CSV with the canonical column set.
pub fn write_records_csv<W: std::io::Write>(out: &mut W, records: &[TransitRecord]) -> std::io::Result<()> {
    writeln!(
        out,
        "node,version,transit,inter_arrival,entry_offset,hops,from_source,peak,valley"
    )?;
    for r in records {
        let gap = r.inter_arrival.map_or(String::new(), |g| g.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.node, r.version, r.transit, gap, r.entry_offset, r.hops, r.from_source, r.peak_age, r.valley_age
        )?;
    }
    Ok(())
}
