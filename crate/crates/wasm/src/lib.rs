//! Browser bindings for the ring gossip age simulator.
//!
//! Three interactive operations, each taking a JSON parameter string and
//! returning a JSON result string (plotting happens in the page): age sample
//! paths, scaling sweeps with a fitted exponent, and the spatial-window
//! study.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use ringage_core::engine::{Acceptance, Observer};
use ringage_core::{
    regime_study, run_sweep, AgeAccumulator, Direction, DistributionSpec, EdgeLaw, Error,
    HorizonRule, InstrumentOptions, KRule, Result, RingConfig, Simulation, SweepPlan,
};

fn direction_from(s: &str) -> Result<Direction> {
    match s {
        "uni" => Ok(Direction::Uni),
        "bi" => Ok(Direction::Bi),
        other => Err(Error::config(format!("direction must be uni or bi, got `{other}`"))),
    }
}

fn default_source() -> DistributionSpec {
    DistributionSpec::exponential(1.0)
}

fn default_edges() -> EdgeLaw {
    EdgeLaw::Homogeneous { spec: DistributionSpec::exponential(1.0) }
}

fn default_direction() -> String {
    "uni".into()
}

fn one() -> f64 {
    1.0
}

fn default_trials() -> usize {
    4
}

fn default_multiplier() -> f64 {
    300.0
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::config(e.to_string()))
}

// ---------------------------------------------------------------------------
// Age sample path
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathParams {
    n: usize,
    #[serde(default = "default_direction")]
    direction: String,
    #[serde(default = "one")]
    lambda_s: f64,
    #[serde(default = "default_source")]
    source: DistributionSpec,
    #[serde(default = "default_edges")]
    edges: EdgeLaw,
    horizon: f64,
    #[serde(default)]
    seed: u64,
    /// Node whose age is plotted; defaults to node 1.
    #[serde(default)]
    node: Option<usize>,
}

#[derive(Serialize)]
struct PathPoint {
    t: f64,
    age: u64,
}

#[derive(Serialize)]
struct PathAcceptance {
    t: f64,
    from_source: bool,
    hops: u32,
    peak: u64,
    valley: u64,
}

#[derive(Serialize)]
struct PathResult {
    node: usize,
    points: Vec<PathPoint>,
    acceptances: Vec<PathAcceptance>,
    mean_age: Option<f64>,
    acceptance_count: u64,
    source_version: u64,
    events: u64,
    truncated: bool,
}

/// Age trajectory of one node: a point after every age change, plus
/// acceptance markers. Mirrors the source counter from generate events.
struct PathProbe {
    node: usize,
    generations: u64,
    age: u64,
    points: Vec<PathPoint>,
    acceptances: Vec<PathAcceptance>,
    cap: usize,
    truncated: bool,
}

impl PathProbe {
    fn new(node: usize, cap: usize) -> Self {
        PathProbe {
            node,
            generations: 0,
            age: 0,
            points: vec![PathPoint { t: 0.0, age: 0 }],
            acceptances: Vec::new(),
            cap,
            truncated: false,
        }
    }

    fn push(&mut self, t: f64, age: u64) {
        if self.points.len() < self.cap {
            self.points.push(PathPoint { t, age });
        } else {
            self.truncated = true;
        }
    }
}

impl Observer for PathProbe {
    fn on_generate(&mut self, now: f64, _version: u64) {
        self.generations += 1;
        self.age += 1;
        self.push(now, self.age);
    }

    fn on_acceptance(&mut self, a: &Acceptance) {
        if a.node != self.node {
            return;
        }
        let peak = self.age;
        let valley = self.generations - a.version;
        self.age = valley;
        self.push(a.now, valley);
        if self.acceptances.len() < self.cap {
            self.acceptances.push(PathAcceptance {
                t: a.now,
                from_source: a.from_source,
                hops: a.hops,
                peak,
                valley,
            });
        }
    }

    fn on_finish(&mut self, now: f64) {
        if self.points.len() < self.cap {
            self.points.push(PathPoint { t: now, age: self.age });
        }
    }
}

fn simulate_path_impl(params: &str) -> Result<String> {
    let p: PathParams =
        serde_json::from_str(params).map_err(|e| Error::config(format!("bad parameters: {e}")))?;
    if p.horizon > 200_000.0 || p.n > 4096 {
        return Err(Error::config("demo limits: horizon <= 2e5, n <= 4096"));
    }
    let node = p.node.unwrap_or_else(|| RingConfig::default_tracked_node(p.n));
    let config = RingConfig::new(p.n, direction_from(&p.direction)?)
        .with_lambda_s(p.lambda_s)
        .with_source_gen(p.source)
        .with_edges(p.edges)
        .with_horizon(p.horizon)
        .with_seed(p.seed)
        .with_tracked(vec![node]);
    config.validate()?;

    let mut sim = Simulation::new(&config)?;
    let mut acc = AgeAccumulator::from_config(&config, InstrumentOptions::default());
    let mut probe = PathProbe::new(node, 60_000);
    let summary = {
        let mut both = (&mut acc, &mut probe);
        sim.run(&mut both)
    };

    to_json(&PathResult {
        node,
        points: probe.points,
        acceptances: probe.acceptances,
        mean_age: acc.time_average_age(node).ok(),
        acceptance_count: acc.acceptance_count(node)?,
        source_version: summary.final_source_version,
        events: summary.counts.total(),
        truncated: probe.truncated,
    })
}

#[wasm_bindgen]
pub fn simulate_path(params: &str) -> std::result::Result<String, JsError> {
    simulate_path_impl(params).map_err(|e| JsError::new(&e.to_string()))
}

// ---------------------------------------------------------------------------
// Scaling sweep
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepParams {
    ns: Vec<usize>,
    #[serde(default = "default_direction")]
    direction: String,
    #[serde(default = "one")]
    lambda_s: f64,
    #[serde(default = "default_source")]
    source: DistributionSpec,
    #[serde(default = "default_edges")]
    edges: EdgeLaw,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default = "default_multiplier")]
    horizon_multiple: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct SweepPointOut {
    n: usize,
    mean_age: f64,
    se_age: f64,
    acceptances: f64,
}

#[derive(Serialize)]
struct SweepOut {
    points: Vec<SweepPointOut>,
    slope: Option<f64>,
    intercept: Option<f64>,
    r_squared: Option<f64>,
}

fn scaling_sweep_impl(params: &str) -> Result<String> {
    let p: SweepParams =
        serde_json::from_str(params).map_err(|e| Error::config(format!("bad parameters: {e}")))?;
    let budget: f64 = p
        .ns
        .iter()
        .map(|&n| p.horizon_multiple * (n as f64).sqrt() * (2 * n + 2) as f64)
        .sum::<f64>()
        * p.trials as f64;
    if budget > 4e8 {
        return Err(Error::config(
            "demo limits: sweep exceeds the in-browser event budget; \
             reduce sizes, trials or the horizon multiple",
        ));
    }
    let base = RingConfig::new(4, direction_from(&p.direction)?)
        .with_lambda_s(p.lambda_s)
        .with_source_gen(p.source)
        .with_edges(p.edges);
    let plan = SweepPlan::new(base, p.ns, p.trials, p.seed)
        .with_horizon(HorizonRule::SqrtMultiple(p.horizon_multiple));
    let result = run_sweep(&plan)?;
    to_json(&SweepOut {
        points: result
            .per_n
            .iter()
            .map(|s| SweepPointOut {
                n: s.n,
                mean_age: s.mean_age,
                se_age: s.se_age,
                acceptances: s.mean_acceptances,
            })
            .collect(),
        slope: result.scaling.as_ref().map(|s| s.fit.slope),
        intercept: result.scaling.as_ref().map(|s| s.fit.intercept),
        r_squared: result.scaling.as_ref().map(|s| s.fit.r_squared),
    })
}

#[wasm_bindgen]
pub fn scaling_sweep(params: &str) -> std::result::Result<String, JsError> {
    scaling_sweep_impl(params).map_err(|e| JsError::new(&e.to_string()))
}

// ---------------------------------------------------------------------------
// Window study
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowParams {
    n: usize,
    #[serde(default = "default_direction")]
    direction: String,
    #[serde(default = "one")]
    lambda_s: f64,
    #[serde(default = "default_source")]
    source: DistributionSpec,
    #[serde(default = "default_edges")]
    edges: EdgeLaw,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default = "default_multiplier")]
    horizon_multiple: f64,
    #[serde(default)]
    seed: u64,
    /// Window exponents to compare, as k = ceil(n^e).
    #[serde(default = "default_exponents")]
    exponents: Vec<f64>,
}

fn default_exponents() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

#[derive(Serialize)]
struct WindowRow {
    exponent: f64,
    k: usize,
    window_fraction: f64,
    mean_wait: f64,
    analytic_wait: f64,
}

fn window_study_impl(params: &str) -> Result<String> {
    let p: WindowParams =
        serde_json::from_str(params).map_err(|e| Error::config(format!("bad parameters: {e}")))?;
    let events = p.horizon_multiple * (p.n as f64).sqrt() * (2 * p.n + 2) as f64 * p.trials as f64;
    if p.n > 2048 || events > 4e8 {
        return Err(Error::config("demo limits: reduce n, trials or the horizon multiple"));
    }
    let base = RingConfig::new(4, direction_from(&p.direction)?)
        .with_lambda_s(p.lambda_s)
        .with_source_gen(p.source)
        .with_edges(p.edges);
    let plan = SweepPlan::new(base, vec![p.n], p.trials, p.seed)
        .with_horizon(HorizonRule::SqrtMultiple(p.horizon_multiple));
    let rules: Vec<KRule> = p.exponents.iter().map(|&e| KRule::power(e)).collect();
    let study = regime_study(&plan, &rules)?;
    let rows: Vec<WindowRow> = study
        .rows
        .iter()
        .zip(&p.exponents)
        .map(|(r, &e)| WindowRow {
            exponent: e,
            k: r.k,
            window_fraction: r.window_fraction,
            mean_wait: r.mean_wait,
            analytic_wait: r.analytic_wait,
        })
        .collect();
    to_json(&rows)
}

#[wasm_bindgen]
pub fn window_study(params: &str) -> std::result::Result<String, JsError> {
    window_study_impl(params).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
