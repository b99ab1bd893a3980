//! Replica orchestration and statistical studies.
//!
//! Sweeps run independent replicas over a list of ring sizes, with seeds
//! derived from (master seed, n, trial) so no two replicas ever share a
//! stream. Aggregation is a deterministic reduction keyed by (n, trial)
//! regardless of worker scheduling. On top of the sweeps sit the scaling
//! fit, the spatial-window regime study, the bi-directional preemption
//! study, and the renewal-count sandwich check.

use serde::Serialize;

use crate::engine::{RunSummary, Simulation};
use crate::error::{Error, Result};
use crate::instrument::{
    window_fraction, AgeAccumulator, InstrumentOptions, Welford, WindowWaitProbe,
};
use crate::network::{build_ring, upstream_window, Direction, RingConfig};
use crate::renewal::{empirical_count, DistributionSpec};
use crate::seed::{derive_rng, derive_seed_u64};

/// How the simulation horizon grows with n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HorizonRule {
    /// Same horizon for every n.
    Fixed(f64),
    /// `multiple * sqrt(n)`: peak/valley cycles lengthen like sqrt(n), so
    /// this keeps the number of observed cycles roughly constant across n.
    SqrtMultiple(f64),
}

impl HorizonRule {
    pub fn horizon(&self, n: usize) -> f64 {
        match *self {
            HorizonRule::Fixed(h) => h,
            HorizonRule::SqrtMultiple(m) => m * (n as f64).sqrt(),
        }
    }
}

/// A window-size rule k(n) = ceil(coeff * n^exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KRule {
    pub coeff: f64,
    pub exponent: f64,
}

impl KRule {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        KRule { coeff, exponent }
    }

    pub fn sqrt() -> Self {
        KRule::new(1.0, 0.5)
    }

    pub fn sqrt_scaled(coeff: f64) -> Self {
        KRule::new(coeff, 0.5)
    }

    pub fn power(exponent: f64) -> Self {
        KRule::new(1.0, exponent)
    }

    pub fn k(&self, n: usize) -> usize {
        ((self.coeff * (n as f64).powf(self.exponent)).ceil() as usize).max(1)
    }

    pub fn label(&self) -> String {
        if self.coeff == 1.0 {
            format!("n^{}", self.exponent)
        } else {
            format!("{}*n^{}", self.coeff, self.exponent)
        }
    }
}

/// A sweep over ring sizes with independent trials per size.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    /// Template configuration; n, horizon and seed are overridden per replica.
    pub base: RingConfig,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub horizon: HorizonRule,
    pub master_seed: u64,
    /// Window rules whose fractions are reported per replica.
    pub window_rules: Vec<KRule>,
}

impl SweepPlan {
    pub fn new(base: RingConfig, ns: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        SweepPlan {
            base,
            ns,
            trials,
            horizon: HorizonRule::SqrtMultiple(1500.0),
            master_seed,
            window_rules: vec![KRule::sqrt()],
        }
    }

    pub fn with_horizon(mut self, rule: HorizonRule) -> Self {
        self.horizon = rule;
        self
    }

    pub fn with_window_rules(mut self, rules: Vec<KRule>) -> Self {
        self.window_rules = rules;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::config("sweep needs at least one ring size"));
        }
        if !self.ns.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("sweep sizes must be strictly increasing"));
        }
        if self.trials < 1 {
            return Err(Error::config("sweep needs at least one trial"));
        }
        for &n in &self.ns {
            self.replica_config(n, 0).validate()?;
            if self.replica_config(n, 0).track.nodes.is_empty() {
                return Err(Error::config("sweep needs a tracked node"));
            }
        }
        Ok(())
    }

    /// The resolved configuration of replica (n, trial).
    pub fn replica_config(&self, n: usize, trial: usize) -> RingConfig {
        self.base
            .clone()
            .with_n(n)
            .with_horizon(self.horizon.horizon(n))
            .with_seed(derive_seed_u64(self.master_seed, "replica", &[n as u64, trial as u64]))
    }
}

/// One completed replica: the engine summary plus its instruments.
pub struct Replica {
    pub config: RingConfig,
    pub summary: RunSummary,
    pub acc: AgeAccumulator,
}

/// Run a single replica with an age accumulator on the configured tracked nodes.
pub fn run_replica(config: &RingConfig, opts: InstrumentOptions) -> Result<Replica> {
    config.validate()?;
    let mut sim = Simulation::new(config)?;
    let mut acc = AgeAccumulator::from_config(config, opts);
    let summary = sim.run(&mut acc);
    Ok(Replica {
        config: config.clone(),
        summary,
        acc,
    })
}

#[cfg(feature = "parallel")]
fn map_replicas<J, T, F>(jobs: Vec<J>, f: F) -> Result<Vec<T>>
where
    J: Send,
    T: Send,
    F: Fn(J) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    jobs.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_replicas<J, T, F>(jobs: Vec<J>, f: F) -> Result<Vec<T>>
where
    F: Fn(J) -> Result<T>,
{
    jobs.into_iter().map(f).collect()
}

/// Per-replica statistics of the primary tracked node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaStats {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub node: usize,
    pub time_average_age: f64,
    pub acceptances: u64,
    pub source_accepts: u64,
    pub gossip_accepts: u64,
    pub mean_peak: f64,
    pub mean_valley: f64,
    pub mean_transit: f64,
    pub mean_inter_arrival: Option<f64>,
    pub mean_gossip_hops: Option<f64>,
    /// Fraction of gossip acceptances with hops > n/2 (bi-directional only).
    pub long_path_fraction: Option<f64>,
    /// (k, fraction of records entering within |offset| <= k).
    pub window_fractions: Vec<(usize, f64)>,
    pub final_source_version: u64,
    pub events: u64,
}

fn replica_stats(plan: &SweepPlan, n: usize, trial: usize) -> Result<ReplicaStats> {
    let config = plan.replica_config(n, trial);
    let node = config.track.nodes[0];
    let replica = run_replica(&config, InstrumentOptions::default()).map_err(|e| {
        Error::Config(format!(
            "replica n={n} trial={trial} seed={} failed: {e}",
            config.sim.seed
        ))
    })?;
    let acc = &replica.acc;
    let stats = acc.stream_stats(node)?;
    let time_average_age = acc.time_average_age(node).map_err(|e| {
        Error::Config(format!(
            "replica n={n} trial={trial} seed={} produced no observation: {e}",
            config.sim.seed
        ))
    })?;
    let records = acc.records(node)?;
    let max_k = replica_max_k(&config);
    let window_fractions = plan
        .window_rules
        .iter()
        .map(|rule| {
            let k = rule.k(n).min(max_k).max(1);
            window_fraction(records, k).map(|f| (k, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let long_path_fraction = match config.ring.direction {
        Direction::Bi if stats.gossip_accepts > 0 => {
            Some(stats.long_path_accepts as f64 / stats.gossip_accepts as f64)
        }
        _ => None,
    };
    Ok(ReplicaStats {
        n,
        trial,
        seed: config.sim.seed,
        node,
        time_average_age,
        acceptances: acc.acceptance_count(node)?,
        source_accepts: stats.source_accepts,
        gossip_accepts: stats.gossip_accepts,
        mean_peak: stats.peak.mean().unwrap_or(f64::NAN),
        mean_valley: stats.valley.mean().unwrap_or(f64::NAN),
        mean_transit: stats.transit.mean().unwrap_or(f64::NAN),
        mean_inter_arrival: stats.inter_arrival.mean(),
        mean_gossip_hops: stats.gossip_hops.mean(),
        long_path_fraction,
        window_fractions,
        final_source_version: replica.summary.final_source_version,
        events: replica.summary.counts.total(),
    })
}

fn replica_max_k(config: &RingConfig) -> usize {
    match config.ring.direction {
        Direction::Uni => config.ring.n.saturating_sub(1),
        Direction::Bi => config.ring.n.saturating_sub(1) / 2,
    }
}

/// Across-trial aggregate for one ring size. Standard errors are computed
/// across trials, respecting the autocorrelation of each age trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPointSummary {
    pub n: usize,
    pub trials: usize,
    pub mean_age: f64,
    pub se_age: f64,
    pub mean_peak: f64,
    pub mean_valley: f64,
    pub mean_transit: f64,
    pub mean_inter_arrival: f64,
    pub mean_acceptances: f64,
    pub min_acceptances: u64,
    /// (k, across-trial mean window fraction).
    pub window_fractions: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// Least-squares line on (log n, log y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// A fitted n-sweep: per-size means with standard errors plus the log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub fit: PowerLawFit,
}

impl ScalingFit {
    pub fn from_points(points: Vec<ScalingPoint>) -> Result<Self> {
        let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
        let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
        let fit = fit_loglog(&ns, &means)?;
        Ok(ScalingFit { points, fit })
    }
}

/// Ordinary least squares on log-transformed data.
pub fn fit_loglog(ns: &[f64], means: &[f64]) -> Result<PowerLawFit> {
    if ns.len() != means.len() {
        return Err(Error::domain("fit needs matching x/y lengths"));
    }
    if ns.len() < 3 {
        return Err(Error::domain(format!(
            "fit needs at least 3 points, got {}",
            ns.len()
        )));
    }
    if ns.iter().chain(means).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("fit needs strictly positive finite values"));
    }
    let xs: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|v| v.ln()).collect();
    let len = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / len;
    let y_mean = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("fit needs at least two distinct sizes"));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let resid = y - (intercept + slope * x);
            resid * resid
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res.abs() < 1e-24 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(PowerLawFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub replicas: Vec<ReplicaStats>,
    pub per_n: Vec<SweepPointSummary>,
    /// Present when the sweep covers at least three sizes.
    pub scaling: Option<ScalingFit>,
}

/// Run the full sweep: every (n, trial) replica, per-n aggregation, and the
/// log-log fit of mean age against n.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = plan
        .ns
        .iter()
        .flat_map(|&n| (0..plan.trials).map(move |t| (n, t)))
        .collect();
    let mut replicas = map_replicas(jobs, |(n, trial)| replica_stats(plan, n, trial))?;
    replicas.sort_by_key(|r| (r.n, r.trial));

    let mut per_n = Vec::new();
    let mut points = Vec::new();
    for &n in &plan.ns {
        let group: Vec<&ReplicaStats> = replicas.iter().filter(|r| r.n == n).collect();
        let ages: Vec<f64> = group.iter().map(|r| r.time_average_age).collect();
        let (mean_age, se_age) = mean_and_se(&ages);
        let mean_of = |f: &dyn Fn(&ReplicaStats) -> f64| {
            group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64
        };
        let mut window_fractions = Vec::new();
        if let Some(first) = group.first() {
            for (ix, &(k, _)) in first.window_fractions.iter().enumerate() {
                let mean =
                    group.iter().map(|r| r.window_fractions[ix].1).sum::<f64>() / group.len() as f64;
                window_fractions.push((k, mean));
            }
        }
        per_n.push(SweepPointSummary {
            n,
            trials: group.len(),
            mean_age,
            se_age,
            mean_peak: mean_of(&|r| r.mean_peak),
            mean_valley: mean_of(&|r| r.mean_valley),
            mean_transit: mean_of(&|r| r.mean_transit),
            mean_inter_arrival: mean_of(&|r| r.mean_inter_arrival.unwrap_or(f64::NAN)),
            mean_acceptances: mean_of(&|r| r.acceptances as f64),
            min_acceptances: group.iter().map(|r| r.acceptances).min().unwrap_or(0),
            window_fractions,
        });
        points.push(ScalingPoint { n, mean: mean_age, std_err: se_age });
    }
    let scaling = (points.len() >= 3)
        .then(|| ScalingFit::from_points(points))
        .transpose()?;
    Ok(SweepResult { replicas, per_n, scaling })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let mut w = Welford::default();
    for &v in values {
        w.push(v);
    }
    (w.mean().unwrap_or(f64::NAN), w.std_err().unwrap_or(0.0))
}

/// One (rule, n) row of the spatial-window study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub rule: String,
    pub n: usize,
    pub k: usize,
    /// Across-trial mean of the per-trial mean waiting time W_k.
    pub mean_wait: f64,
    pub se_wait: f64,
    pub wait_samples: u64,
    /// Exact Poisson-thinning value n/(k lambda_s), halved rate on bi rings.
    pub analytic_wait: f64,
    pub window_fraction: f64,
    pub se_window_fraction: f64,
    /// Mean inter-arrival gap of records whose entry lies inside the window.
    pub mean_inwindow_inter_arrival: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeStudy {
    pub rows: Vec<RegimeRow>,
}

/// Measure, for each rule k(n), the waiting time until the source delivers
/// into V_k after each acceptance at the tracked node, the fraction of
/// records entering within the window, and the in-window inter-arrival mean.
pub fn regime_study(plan: &SweepPlan, k_rules: &[KRule]) -> Result<RegimeStudy> {
    plan.validate()?;
    if k_rules.is_empty() {
        return Err(Error::config("regime study needs at least one k rule"));
    }

    struct TrialOut {
        n: usize,
        waits: Vec<(usize, Welford)>,
        fractions: Vec<f64>,
        inwindow_gap_means: Vec<Option<f64>>,
    }

    let jobs: Vec<(usize, usize)> = plan
        .ns
        .iter()
        .flat_map(|&n| (0..plan.trials).map(move |t| (n, t)))
        .collect();
    let outs = map_replicas(jobs, |(n, trial)| -> Result<TrialOut> {
        let config = plan.replica_config(n, trial);
        let node = config.track.nodes[0];
        let topo = build_ring(&config)?;
        let max_k = topo.max_window_k();
        let ks: Vec<usize> = k_rules.iter().map(|r| r.k(n).min(max_k).max(1)).collect();
        let windows = ks
            .iter()
            .map(|&k| upstream_window(&topo, node, k).map(|set| (k, set)))
            .collect::<Result<Vec<_>>>()?;
        let mut sim = Simulation::new(&config)?;
        let mut acc = AgeAccumulator::from_config(&config, InstrumentOptions::default());
        let mut probe = WindowWaitProbe::new(config.ring.n, node, windows);
        let mut both = (&mut acc, &mut probe);
        sim.run(&mut both);

        let records = acc.records(node)?;
        let mut fractions = Vec::new();
        let mut inwindow_gap_means = Vec::new();
        for &k in &ks {
            fractions.push(window_fraction(records, k)?);
            let mut gaps = Welford::default();
            for r in records {
                if r.entry_offset.unsigned_abs() <= k as u64 {
                    if let Some(g) = r.inter_arrival {
                        gaps.push(g);
                    }
                }
            }
            inwindow_gap_means.push(gaps.mean());
        }
        Ok(TrialOut {
            n,
            waits: probe.results(),
            fractions,
            inwindow_gap_means,
        })
    })?;

    let mut rows = Vec::new();
    for &n in &plan.ns {
        let group: Vec<&TrialOut> = outs.iter().filter(|o| o.n == n).collect();
        let lambda_s = plan.base.source.lambda_s;
        for (ix, rule) in k_rules.iter().enumerate() {
            let k = group[0].waits[ix].0;
            let wait_means: Vec<f64> = group
                .iter()
                .filter_map(|o| o.waits[ix].1.mean())
                .collect();
            let (mean_wait, se_wait) = mean_and_se(&wait_means);
            let wait_samples: u64 = group.iter().map(|o| o.waits[ix].1.count()).sum();
            let fractions: Vec<f64> = group.iter().map(|o| o.fractions[ix]).collect();
            let (window_frac, se_frac) = mean_and_se(&fractions);
            let gap_means: Vec<f64> = group
                .iter()
                .filter_map(|o| o.inwindow_gap_means[ix])
                .collect();
            let sides = match plan.base.ring.direction {
                Direction::Uni => 1.0,
                Direction::Bi => 2.0,
            };
            rows.push(RegimeRow {
                rule: rule.label(),
                n,
                k,
                mean_wait,
                se_wait,
                wait_samples,
                analytic_wait: n as f64 / (sides * k as f64 * lambda_s),
                window_fraction: window_frac,
                se_window_fraction: se_frac,
                mean_inwindow_inter_arrival: (!gap_means.is_empty())
                    .then(|| gap_means.iter().sum::<f64>() / gap_means.len() as f64),
            });
        }
    }
    Ok(RegimeStudy { rows })
}

/// One ring size of the preemption study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreemptionRow {
    pub n: usize,
    pub long_path_fraction: f64,
    pub se_long_path_fraction: f64,
    pub mean_hops: f64,
    pub se_hops: f64,
    pub gossip_accepts: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreemptionStudy {
    pub rows: Vec<PreemptionRow>,
    /// Log-log fit of mean accepted hop count against n.
    pub hops_fit: PowerLawFit,
}

/// Long-path statistics on bi-directional rings: how often accepted updates
/// traveled more than n/2 hops, and how the accepted hop count scales.
pub fn preemption_study(plan: &SweepPlan) -> Result<PreemptionStudy> {
    plan.validate()?;
    if plan.base.ring.direction != Direction::Bi {
        return Err(Error::config(
            "preemption study requires a bi-directional ring",
        ));
    }
    let jobs: Vec<(usize, usize)> = plan
        .ns
        .iter()
        .flat_map(|&n| (0..plan.trials).map(move |t| (n, t)))
        .collect();
    let stats = map_replicas(jobs, |(n, trial)| replica_stats(plan, n, trial))?;

    let mut rows = Vec::new();
    for &n in &plan.ns {
        let group: Vec<&ReplicaStats> = stats.iter().filter(|r| r.n == n).collect();
        let fractions: Vec<f64> = group.iter().filter_map(|r| r.long_path_fraction).collect();
        if fractions.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no gossip acceptances at n={n}; increase the horizon"
            )));
        }
        let (frac, se_frac) = mean_and_se(&fractions);
        let hops: Vec<f64> = group.iter().filter_map(|r| r.mean_gossip_hops).collect();
        let (mean_hops, se_hops) = mean_and_se(&hops);
        rows.push(PreemptionRow {
            n,
            long_path_fraction: frac,
            se_long_path_fraction: se_frac,
            mean_hops,
            se_hops,
            gossip_accepts: group.iter().map(|r| r.gossip_accepts).sum(),
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let hops: Vec<f64> = rows.iter().map(|r| r.mean_hops).collect();
    let hops_fit = fit_loglog(&ns, &hops)?;
    Ok(PreemptionStudy { rows, hops_fit })
}

/// Law of the random horizon T in the renewal-count sandwich check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TSampler {
    Constant(f64),
    /// Exponential with the given mean.
    ExponentialMean(f64),
    /// Sum of `count` independent draws from `spec`, emulating a propagation
    /// time through `count` edges.
    SumOfDraws { count: usize, spec: DistributionSpec },
}

impl TSampler {
    pub fn validate(&self) -> Result<()> {
        match self {
            TSampler::Constant(c) => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(Error::config(format!("constant T must be >= 0, got {c}")));
                }
            }
            TSampler::ExponentialMean(m) => {
                if !(*m > 0.0) || !m.is_finite() {
                    return Err(Error::config(format!("exponential mean must be > 0, got {m}")));
                }
            }
            TSampler::SumOfDraws { count, spec } => {
                if *count == 0 {
                    return Err(Error::config("sum sampler needs count >= 1"));
                }
                spec.validate()?;
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            TSampler::Constant(c) => format!("constant({c})"),
            TSampler::ExponentialMean(m) => format!("exponential_mean({m})"),
            TSampler::SumOfDraws { count, spec } => {
                format!("sum({count} x {})", spec.describe())
            }
        }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TSampler::Constant(c) => *c,
            TSampler::ExponentialMean(m) => {
                let u: f64 = rng.gen::<f64>();
                -m * (1.0 - u).ln()
            }
            TSampler::SumOfDraws { count, spec } => {
                let sampler = spec.sampler().expect("validated spec");
                (0..*count).map(|_| sampler.draw(rng)).sum()
            }
        }
    }
}

/// Monte Carlo verification that E[N(T)] sits inside the averaged sandwich
/// bounds, plus the law-of-total-variance decomposition of Var[N(T)].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub source: DistributionSpec,
    pub sampler: String,
    pub trials: u64,
    /// Independent counting paths sampled per drawn T (for the variance
    /// decomposition).
    pub paths_per_t: u32,
    pub mean_t: f64,
    pub mean_count: f64,
    pub se_count: f64,
    /// mean_t/mu - 1.
    pub lower_bound: f64,
    /// mean_t/mu + (sigma^2 + mu^2)/mu^2.
    pub upper_bound: f64,
    /// mean_count within (lower, upper) after a 3-sigma allowance.
    pub inside_sandwich: bool,
    /// Total variance: mean_var_given_t + var_mean_given_t.
    pub var_count: f64,
    /// Estimate of E[Var[N(T)|T]].
    pub mean_var_given_t: f64,
    /// Estimate of Var[E[N(T)|T]].
    pub var_mean_given_t: f64,
}

/// Estimate E[N(T)] over `trials` draws of T with two counting paths each,
/// and compare against the sandwich bounds evaluated at the empirical E[T].
pub fn lemma1_check(
    source: &DistributionSpec,
    sampler: &TSampler,
    trials: u64,
    seed: u64,
) -> Result<Lemma1Report> {
    source.validate()?;
    sampler.validate()?;
    if trials < 2 {
        return Err(Error::config("lemma1 check needs at least 2 trials"));
    }
    let mut rng = derive_rng(seed, "lemma1", &[]);
    let mut t_stats = Welford::default();
    let mut group_means = Welford::default();
    let mut within_vars = Welford::default();
    for _ in 0..trials {
        let t = sampler.draw(&mut rng);
        let n1 = empirical_count(source, t, &mut rng)? as f64;
        let n2 = empirical_count(source, t, &mut rng)? as f64;
        t_stats.push(t);
        group_means.push(0.5 * (n1 + n2));
        within_vars.push(0.5 * (n1 - n2) * (n1 - n2));
    }
    let mean_t = t_stats.mean().unwrap();
    let mean_count = group_means.mean().unwrap();
    let se_count = group_means.std_err().unwrap();
    let (mu, var) = source.moments()?;
    let lower_bound = mean_t / mu - 1.0;
    let upper_bound = mean_t / mu + (var + mu * mu) / (mu * mu);
    let inside_sandwich =
        mean_count > lower_bound - 3.0 * se_count && mean_count < upper_bound + 3.0 * se_count;
    let mean_var_given_t = within_vars.mean().unwrap();
    // Between-group variance inflates by (within variance)/2; remove it.
    let var_mean_given_t =
        (group_means.variance().unwrap() - mean_var_given_t / 2.0).max(0.0);
    Ok(Lemma1Report {
        source: *source,
        sampler: sampler.describe(),
        trials,
        paths_per_t: 2,
        mean_t,
        mean_count,
        se_count,
        lower_bound,
        upper_bound,
        inside_sandwich,
        var_count: mean_var_given_t + var_mean_given_t,
        mean_var_given_t,
        var_mean_given_t,
    })
}
