#![allow(dead_code)] // each test target uses a subset of these helpers

//! Test-only oracles, independent of the simulation engine.
//!
//! These reimplement the quantities the engine is supposed to produce using
//! the most direct brute-force formulation available, so engine results can
//! be checked against an implementation that shares no code path with it.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringage_core::engine::{Acceptance, Observer};
use ringage_core::instrument::TransitRecord;
use ringage_core::network::Direction;
use ringage_core::renewal::DistributionSpec;
use ringage_core::seed::derive_seed;

pub fn test_rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(seed, label, &[]))
}

/// Exact renewal count for a deterministic law: arrivals at p, 2p, 3p, ...
pub fn deterministic_count(period: f64, t: f64) -> u64 {
    (t / period).floor() as u64
}

/// Brute-force time-average version age for the single-node network.
///
/// Two independent processes only: the source generates versions on a renewal
/// process with law `gen`, and delivers its current version to the lone node
/// at exponential(`delivery_rate`) epochs. Age = versions generated minus the
/// node's version; observation starts at the node's first delivery that
/// carries a version. Shares nothing with the event-queue engine.
pub fn two_process_age_average(
    gen: &DistributionSpec,
    delivery_rate: f64,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let gen_sampler = gen.sampler().unwrap();
    let mut next_gen = gen_sampler.draw(rng);
    let mut next_delivery = -rng.gen::<f64>().ln() / delivery_rate;

    let mut generated: u64 = 0;
    let mut node_version: u64 = 0;
    let mut observing_from: Option<f64> = None;
    let mut last_t = 0.0_f64;
    let mut integral = 0.0_f64;

    loop {
        let (t, is_gen) = if next_gen <= next_delivery {
            (next_gen, true)
        } else {
            (next_delivery, false)
        };
        if t > horizon {
            break;
        }
        if observing_from.is_some() {
            integral += (generated - node_version) as f64 * (t - last_t);
        }
        last_t = t;
        if is_gen {
            generated += 1;
            next_gen += gen_sampler.draw(rng);
        } else {
            if generated > 0 {
                node_version = generated;
                if observing_from.is_none() {
                    observing_from = Some(t);
                    integral = 0.0;
                }
            }
            next_delivery += -rng.gen::<f64>().ln() / delivery_rate;
        }
    }
    let start = observing_from.expect("no delivery before horizon");
    integral += (generated - node_version) as f64 * (horizon - last_t);
    integral / (horizon - start)
}

/// Mirrors the full network state from observer callbacks alone and asserts
/// the per-event invariants: the strictly-better push rule, age
/// non-negativity, monotone provenance, causality, and hop soundness.
pub struct InvariantMirror {
    n: usize,
    direction: Direction,
    source_version: u64,
    versions: Vec<u64>,
    gen_times: Vec<f64>,
    last_gen_time: Vec<f64>,
    /// Acceptance log per node, for replay checks.
    pub acceptances: Vec<Vec<Acceptance>>,
}

impl InvariantMirror {
    pub fn new(n: usize, direction: Direction) -> Self {
        InvariantMirror {
            n,
            direction,
            source_version: 0,
            versions: vec![0; n],
            gen_times: Vec::new(),
            last_gen_time: vec![f64::NEG_INFINITY; n],
            acceptances: vec![Vec::new(); n],
        }
    }

    fn clockwise(&self, from: usize, to: usize) -> usize {
        (to + self.n - from) % self.n
    }

    /// Generations with time <= t (times are exact stored floats).
    pub fn generations_le(&self, t: f64) -> u64 {
        self.gen_times.partition_point(|&g| g <= t) as u64
    }
}

impl Observer for InvariantMirror {
    fn on_generate(&mut self, now: f64, version: u64) {
        self.source_version += 1;
        assert_eq!(version, self.source_version, "generation counter mirrors");
        if let Some(&prev) = self.gen_times.last() {
            assert!(now > prev, "generation times strictly increase");
        }
        self.gen_times.push(now);
    }

    fn on_edge_fire(&mut self, _now: f64, src: usize, dst: usize, pushed: u64, acc: Option<&Acceptance>) {
        assert_eq!(pushed, self.versions[src], "push carries the sender's version");
        assert_eq!(
            acc.is_some(),
            pushed > self.versions[dst],
            "push accepted iff strictly fresher"
        );
    }

    fn on_acceptance(&mut self, a: &Acceptance) {
        assert!(a.version <= self.source_version, "age stays non-negative");
        assert!(a.version >= 1, "version 0 is never delivered");
        assert!(a.now >= a.gen_time, "causality");
        if a.from_source {
            assert_eq!(a.hops, 0);
            assert_eq!(a.entry_node, a.node);
            assert_eq!(a.version, self.source_version, "source delivers its latest");
        } else {
            assert!(a.hops >= 1, "gossip takes at least one hop");
            assert!(
                a.version > self.versions[a.node],
                "gossip adoption strictly improves the version"
            );
            assert!(
                a.gen_time > self.last_gen_time[a.node]
                    || self.last_gen_time[a.node] == f64::NEG_INFINITY,
                "adopted generation is strictly later than the replaced one"
            );
            // Provenance chains are self-avoiding, so the realized path is
            // one of the two arcs; uni rings have only the clockwise arc.
            let cw = self.clockwise(a.entry_node, a.node);
            let feasible = match self.direction {
                Direction::Uni => a.hops as usize == cw,
                Direction::Bi => {
                    a.hops as usize == cw || a.hops as usize == self.n - cw
                }
            };
            assert!(
                feasible,
                "hops {} must realize an arc from {} to {} (n={}, cw={})",
                a.hops, a.entry_node, a.node, self.n, cw
            );
            let shortest = match self.direction {
                Direction::Uni => cw,
                Direction::Bi => cw.min(self.n - cw),
            };
            assert!(a.hops as usize >= shortest, "hops at least the shortest path");
        }
        self.versions[a.node] = a.version;
        self.last_gen_time[a.node] = a.gen_time;
        self.acceptances[a.node].push(*a);
    }
}

/// Replay the record stream of one node against the mirror's generation
/// table: the valley identity, the peak identity, and transit consistency.
pub fn replay_records(mirror: &InvariantMirror, node: usize, records: &[TransitRecord]) {
    let log = &mirror.acceptances[node];
    assert_eq!(log.len(), records.len(), "records match acceptance events 1:1");
    let mut prev_now = 0.0_f64;
    let mut prev_valley = 0u64;
    for (rec, acc) in records.iter().zip(log) {
        assert_eq!(rec.version, acc.version);
        assert_eq!(rec.hops, acc.hops);
        assert_eq!(rec.from_source, acc.from_source);
        assert!(rec.transit > 0.0);
        assert_eq!(rec.transit, acc.now - acc.gen_time, "transit from absolute times");

        // Valley identity: generations inside (gen_time, accept_time].
        let valley = mirror.generations_le(acc.now) - mirror.generations_le(acc.gen_time);
        assert_eq!(rec.valley_age, valley, "valley identity at v{}", rec.version);

        // Peak identity: valley + generations in (prev accept, gen_time] +
        // previous valley. The window count is signed via cumulative
        // differences: an in-flight overtake can place gen_time before the
        // previous acceptance.
        let window = mirror.generations_le(acc.gen_time) as i64 - mirror.generations_le(prev_now) as i64;
        let expect_peak = rec.valley_age as i64 + window + prev_valley as i64;
        assert_eq!(rec.peak_age as i64, expect_peak, "peak identity at v{}", rec.version);
        assert!(rec.peak_age >= rec.valley_age);

        prev_now = acc.now;
        prev_valley = rec.valley_age;
    }
}

/// Recompute the age integral of one node from the acceptance/generation
/// logs and compare with the accumulator's piecewise-constant integral.
pub fn replay_age_integral(
    mirror: &InvariantMirror,
    node: usize,
    observe_from: Option<f64>,
    horizon: f64,
    reported_average: Option<f64>,
) {
    let Some(start) = observe_from else {
        assert!(reported_average.is_none());
        return;
    };
    let log = &mirror.acceptances[node];
    let mut events: Vec<(f64, i8, u64)> = Vec::new();
    for &g in &mirror.gen_times {
        events.push((g, 0, 0));
    }
    for a in log {
        events.push((a.now, 1, a.version));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut sv = 0u64;
    let mut version = 0u64;
    let mut last_t = start;
    let mut integral = 0.0;
    for (t, kind, v) in events {
        if t > start {
            integral += (sv - version) as f64 * (t.min(horizon) - last_t);
            last_t = t.min(horizon);
        }
        if kind == 0 {
            sv += 1;
        } else {
            version = v;
        }
    }
    integral += (sv - version) as f64 * (horizon - last_t);
    let expect = integral / (horizon - start);
    let got = reported_average.expect("observed node reports an average");
    let tol = 1e-9 * expect.abs().max(1.0);
    assert!(
        (got - expect).abs() <= tol,
        "age integral replay: got {got}, expected {expect}"
    );
}

/// A small randomized configuration: n <= 8, mixed laws (deterministic ones
/// included so event ties actually occur), random rates and horizons.
pub fn random_small_config(rng: &mut ChaCha8Rng, seed: u64) -> ringage_core::RingConfig {
    use ringage_core::{BurnIn, EdgeLaw, RingConfig};

    let n = rng.gen_range(1..=8);
    let direction = if rng.gen_bool(0.5) { Direction::Uni } else { Direction::Bi };
    let law_menu = |rng: &mut ChaCha8Rng| -> DistributionSpec {
        match rng.gen_range(0..5) {
            0 => DistributionSpec::exponential(rng.gen_range(0.3..3.0)),
            1 => DistributionSpec::gamma(rng.gen_range(0.5..3.0), rng.gen_range(0.2..1.5)),
            2 => DistributionSpec::uniform(0.0, rng.gen_range(0.5..2.5)),
            3 => DistributionSpec::deterministic(
                // Dyadic periods collide exactly, exercising tie-breaking.
                [0.25, 0.5, 1.0][rng.gen_range(0..3)],
            ),
            _ => DistributionSpec::lognormal(rng.gen_range(-0.7..0.4), rng.gen_range(0.3..1.0)),
        }
    };
    let edges = match rng.gen_range(0..3) {
        0 => EdgeLaw::Homogeneous { spec: law_menu(rng) },
        1 => EdgeLaw::Cycle { specs: vec![law_menu(rng), law_menu(rng)] },
        _ => EdgeLaw::JitterExpRate { rate_lo: 0.4, rate_hi: 2.5 },
    };
    RingConfig::new(n, direction)
        .with_lambda_s(rng.gen_range(0.5..3.0))
        .with_source_gen(law_menu(rng))
        .with_edges(edges)
        .with_horizon(rng.gen_range(30.0..80.0))
        .with_seed(seed)
        .with_burn_in(BurnIn::FirstAcceptance)
        .with_tracked((0..n).collect())
}

/// Run the full engine-invariant suite on `count` randomized small configs:
/// per-event mirror assertions, record replay (valley/peak identities, hop
/// soundness), age-integral replay, and bit-identical determinism across a
/// rerun. Returns (configs checked, records replayed).
pub fn run_invariant_suite(count: usize, master_seed: u64) -> (usize, u64) {
    use ringage_core::{AgeAccumulator, InstrumentOptions, Simulation};

    let mut rng = test_rng(master_seed, "invariant-configs");
    let mut replayed = 0u64;
    for case in 0..count {
        let config = random_small_config(&mut rng, derive_seed_u64_like(master_seed, case));
        let run = |config: &ringage_core::RingConfig| {
            let mut sim = Simulation::new(config).unwrap();
            let mut acc = AgeAccumulator::from_config(config, InstrumentOptions::default());
            let mut mirror = InvariantMirror::new(config.n(), config.direction());
            let summary = {
                let mut both = (&mut acc, &mut mirror);
                sim.run(&mut both)
            };
            (summary, acc, mirror)
        };
        let (summary, acc, mirror) = run(&config);
        let (summary2, acc2, _mirror2) = run(&config);

        // Determinism: bit-identical event counts, ages and record streams.
        assert_eq!(summary.counts, summary2.counts, "case {case}");
        assert_eq!(summary.final_ages, summary2.final_ages, "case {case}");

        for node in 0..config.n() {
            let records = acc.records(node).unwrap();
            assert_eq!(records, acc2.records(node).unwrap(), "case {case} node {node}");
            replay_records(&mirror, node, records);
            replay_age_integral(
                &mirror,
                node,
                acc.observation_start(node).unwrap(),
                summary.horizon,
                acc.time_average_age(node).ok(),
            );
            replayed += records.len() as u64;
        }
    }
    (count, replayed)
}

fn derive_seed_u64_like(master: u64, case: usize) -> u64 {
    ringage_core::seed::derive_seed_u64(master, "invariant-case", &[case as u64])
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance (ddof = 1).
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}
