//! Inter-arrival distributions and renewal streams.
//!
//! Every process in the model (source generation, source-to-node delivery,
//! per-edge gossip) is a renewal process whose inter-arrival law has finite
//! mean and finite variance. This module defines the supported laws with
//! closed-form first two moments, positive-only sampling, the elementary
//! renewal / Lorden sandwich for the expected counting process, and a Monte
//! Carlo counting oracle.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An inter-arrival law with finite mean and finite variance.
///
/// | kind          | parameters          | mean               | variance                      |
/// |---------------|---------------------|--------------------|-------------------------------|
/// | exponential   | rate λ > 0          | 1/λ                | 1/λ²                          |
/// | gamma         | shape α, scale θ    | αθ                 | αθ²                           |
/// | uniform       | 0 ≤ lo < hi         | (lo+hi)/2          | (hi−lo)²/12                   |
/// | deterministic | period p > 0        | p                  | 0                             |
/// | lognormal     | mu_log, sigma_log   | exp(μ+σ²/2)        | (exp(σ²)−1)·exp(2μ+σ²)        |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Deterministic { period: f64 },
    Lognormal { mu_log: f64, sigma_log: f64 },
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Self {
        DistributionSpec::Exponential { rate }
    }

    pub fn gamma(shape: f64, scale: f64) -> Self {
        DistributionSpec::Gamma { shape, scale }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        DistributionSpec::Uniform { lo, hi }
    }

    pub fn deterministic(period: f64) -> Self {
        DistributionSpec::Deterministic { period }
    }

    pub fn lognormal(mu_log: f64, sigma_log: f64) -> Self {
        DistributionSpec::Lognormal { mu_log, sigma_log }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        match *self {
            DistributionSpec::Exponential { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return fail(format!("exponential rate must be positive, got {rate}"));
                }
            }
            DistributionSpec::Gamma { shape, scale } => {
                if !(shape > 0.0) || !shape.is_finite() || !(scale > 0.0) || !scale.is_finite() {
                    return fail(format!(
                        "gamma requires shape > 0 and scale > 0, got shape={shape}, scale={scale}"
                    ));
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo >= 0.0) || !(lo < hi) || !hi.is_finite() {
                    return fail(format!("uniform requires 0 <= lo < hi, got lo={lo}, hi={hi}"));
                }
            }
            DistributionSpec::Deterministic { period } => {
                if !(period > 0.0) || !period.is_finite() {
                    return fail(format!("deterministic period must be positive, got {period}"));
                }
            }
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                // mu_log is a log-domain location and may be negative.
                if !mu_log.is_finite() || !(sigma_log > 0.0) || !sigma_log.is_finite() {
                    return fail(format!(
                        "lognormal requires finite mu_log and sigma_log > 0, got mu_log={mu_log}, sigma_log={sigma_log}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Closed-form mean of the inter-arrival law.
    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Gamma { shape, scale } => shape * scale,
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Deterministic { period } => period,
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                (mu_log + 0.5 * sigma_log * sigma_log).exp()
            }
        }
    }

    /// Closed-form variance of the inter-arrival law.
    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Exponential { rate } => 1.0 / (rate * rate),
            DistributionSpec::Gamma { shape, scale } => shape * scale * scale,
            DistributionSpec::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            DistributionSpec::Deterministic { .. } => 0.0,
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                (s2.exp() - 1.0) * (2.0 * mu_log + s2).exp()
            }
        }
    }

    /// Exact first two moments `(mean, variance)`.
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok((self.mean(), self.variance()))
    }

    /// Build the sampling kernel for this law.
    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Sampler::build(self)
    }

    /// A short human-readable form, e.g. `exponential(rate=1)`.
    pub fn describe(&self) -> String {
        match *self {
            DistributionSpec::Exponential { rate } => format!("exponential(rate={rate})"),
            DistributionSpec::Gamma { shape, scale } => format!("gamma(shape={shape}, scale={scale})"),
            DistributionSpec::Uniform { lo, hi } => format!("uniform({lo}, {hi})"),
            DistributionSpec::Deterministic { period } => format!("deterministic({period})"),
            DistributionSpec::Lognormal { mu_log, sigma_log } => {
                format!("lognormal(mu_log={mu_log}, sigma_log={sigma_log})")
            }
        }
    }
}

/// Prebuilt sampling kernel for a [`DistributionSpec`].
///
/// Draws are strictly positive: a zero draw (possible only at machine
/// precision) is rejected and resampled so that arrival times strictly
/// increase.
#[derive(Debug, Clone)]
pub enum Sampler {
    Exponential(rand_distr::Exp<f64>),
    Gamma(rand_distr::Gamma<f64>),
    Uniform(rand_distr::Uniform<f64>),
    Deterministic(f64),
    Lognormal(rand_distr::LogNormal<f64>),
}

impl Sampler {
    fn build(spec: &DistributionSpec) -> Result<Self> {
        let bad = |e: String| Error::Config(format!("cannot build sampler: {e}"));
        Ok(match *spec {
            DistributionSpec::Exponential { rate } => {
                Sampler::Exponential(rand_distr::Exp::new(rate).map_err(|e| bad(e.to_string()))?)
            }
            DistributionSpec::Gamma { shape, scale } => {
                Sampler::Gamma(rand_distr::Gamma::new(shape, scale).map_err(|e| bad(e.to_string()))?)
            }
            DistributionSpec::Uniform { lo, hi } => {
                Sampler::Uniform(rand_distr::Uniform::new(lo, hi))
            }
            DistributionSpec::Deterministic { period } => Sampler::Deterministic(period),
            DistributionSpec::Lognormal { mu_log, sigma_log } => Sampler::Lognormal(
                rand_distr::LogNormal::new(mu_log, sigma_log).map_err(|e| bad(e.to_string()))?,
            ),
        })
    }

    /// One strictly positive inter-arrival draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x = match self {
                Sampler::Exponential(d) => d.sample(rng),
                Sampler::Gamma(d) => d.sample(rng),
                Sampler::Uniform(d) => d.sample(rng),
                Sampler::Deterministic(p) => *p,
                Sampler::Lognormal(d) => d.sample(rng),
            };
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Draw one strictly positive inter-arrival time from `spec`.
pub fn sample_interarrival<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> Result<f64> {
    Ok(spec.sampler()?.draw(rng))
}

/// The sandwich on the expected renewal count E[N(x)]:
/// `x/μ − 1 < E[N(x)] ≤ x/μ + (σ² + μ²)/μ²`.
///
/// The lower bound is the elementary-renewal-theorem step; the upper bound is
/// Lorden's inequality. Returns `(lower, upper)`.
pub fn expected_count_bounds(spec: &DistributionSpec, x: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("count bounds need x >= 0, got {x}")));
    }
    let (mean, var) = (spec.mean(), spec.variance());
    let lower = x / mean - 1.0;
    let upper = x / mean + (var + mean * mean) / (mean * mean);
    debug_assert!(lower < upper);
    Ok((lower, upper))
}

/// Number of renewals in `[0, t]` for one freshly started (ordinary) sample
/// path: a Monte Carlo oracle for the counting process N(t).
pub fn empirical_count<R: Rng + ?Sized>(spec: &DistributionSpec, t: f64, rng: &mut R) -> Result<u64> {
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("count needs t >= 0, got {t}")));
    }
    let sampler = spec.sampler()?;
    let mut clock = 0.0;
    let mut count = 0u64;
    loop {
        clock += sampler.draw(rng);
        if clock > t {
            return Ok(count);
        }
        count += 1;
    }
}

/// A seeded renewal stream: the law, its RNG stream, and the next arrival.
///
/// Streams start as ordinary renewal processes at time zero — the first
/// arrival is one fresh inter-arrival draw — and arrival times strictly
/// increase on every [`advance`](RenewalStream::advance).
#[derive(Debug, Clone)]
pub struct RenewalStream {
    spec: DistributionSpec,
    sampler: Sampler,
    rng: ChaCha8Rng,
    next_arrival: f64,
}

impl RenewalStream {
    pub fn new(spec: DistributionSpec, seed: [u8; 32]) -> Result<Self> {
        let sampler = spec.sampler()?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        let first = sampler.draw(&mut rng);
        Ok(RenewalStream {
            spec,
            sampler,
            rng,
            next_arrival: first,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    /// Time of the stream's pending arrival.
    pub fn next_arrival(&self) -> f64 {
        self.next_arrival
    }

    /// Consume the pending arrival and schedule the one after it.
    /// Returns the new pending arrival time.
    pub fn advance(&mut self) -> f64 {
        self.next_arrival += self.sampler.draw(&mut self.rng);
        self.next_arrival
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_seed;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(derive_seed(seed, "renewal-test", &[]))
    }

    #[test]
    fn moments_closed_forms() {
        let (m, v) = DistributionSpec::exponential(2.0).moments().unwrap();
        assert_eq!((m, v), (0.5, 0.25));

        let (m, v) = DistributionSpec::uniform(0.0, 2.0).moments().unwrap();
        assert_eq!(m, 1.0);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);

        let (m, v) = DistributionSpec::deterministic(3.0).moments().unwrap();
        assert_eq!((m, v), (3.0, 0.0));

        let (m, v) = DistributionSpec::gamma(2.0, 0.5).moments().unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        assert!((v - 0.5).abs() < 1e-15);

        // Lognormal against the closed form at (0, 0.5).
        let (m, v) = DistributionSpec::lognormal(0.0, 0.5).moments().unwrap();
        assert!((m - (0.125f64).exp()).abs() < 1e-12);
        assert!((v - ((0.25f64).exp() - 1.0) * (0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        for spec in [
            DistributionSpec::exponential(0.0),
            DistributionSpec::exponential(-1.0),
            DistributionSpec::gamma(0.0, 1.0),
            DistributionSpec::gamma(1.0, -2.0),
            DistributionSpec::uniform(-0.5, 1.0),
            DistributionSpec::uniform(1.0, 1.0),
            DistributionSpec::uniform(2.0, 1.0),
            DistributionSpec::deterministic(0.0),
            DistributionSpec::lognormal(f64::NAN, 1.0),
            DistributionSpec::lognormal(0.0, 0.0),
        ] {
            assert!(
                matches!(spec.validate(), Err(Error::Config(_))),
                "{spec:?} should be rejected"
            );
        }
    }

    #[test]
    fn deterministic_sampling_is_the_period() {
        let mut r = rng(1);
        let spec = DistributionSpec::deterministic(2.0);
        for _ in 0..16 {
            assert_eq!(sample_interarrival(&spec, &mut r).unwrap(), 2.0);
        }
    }

    #[test]
    fn exponential_sample_mean_matches_law_of_large_numbers() {
        let mut r = rng(2);
        let sampler = DistributionSpec::exponential(1.0).sampler().unwrap();
        let n = 1_000_000;
        let mean = (0..n).map(|_| sampler.draw(&mut r)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn gamma_sample_variance_matches_closed_form() {
        let mut r = rng(3);
        let sampler = DistributionSpec::gamma(2.0, 0.5).sampler().unwrap();
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sampler.draw(&mut r)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 0.5).abs() < 0.01, "sample variance {var}");
    }

    #[test]
    fn samples_are_strictly_positive() {
        let mut r = rng(4);
        for spec in [
            DistributionSpec::exponential(5.0),
            DistributionSpec::gamma(0.3, 1.0),
            DistributionSpec::uniform(0.0, 1e-6),
            DistributionSpec::lognormal(-4.0, 2.0),
        ] {
            let sampler = spec.sampler().unwrap();
            for _ in 0..10_000 {
                assert!(sampler.draw(&mut r) > 0.0);
            }
        }
    }

    #[test]
    fn count_bounds_examples() {
        let (lo, hi) =
            expected_count_bounds(&DistributionSpec::exponential(1.0), 10.0).unwrap();
        assert_eq!((lo, hi), (9.0, 12.0));

        // x = 0 collapses to (-1, (σ²+μ²)/μ²].
        let spec = DistributionSpec::gamma(2.0, 0.5);
        let (lo, hi) = expected_count_bounds(&spec, 0.0).unwrap();
        assert_eq!(lo, -1.0);
        assert!((hi - 1.5).abs() < 1e-12);

        // Deterministic(1) at x = 5.5 sandwiches the exact count 5.
        let (lo, hi) = expected_count_bounds(&DistributionSpec::deterministic(1.0), 5.5).unwrap();
        assert_eq!((lo, hi), (4.5, 6.5));
        assert!(lo < 5.0 && 5.0 < hi);

        assert!(matches!(
            expected_count_bounds(&DistributionSpec::exponential(1.0), -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empirical_count_degenerate_cases() {
        let mut r = rng(5);
        assert_eq!(
            empirical_count(&DistributionSpec::deterministic(2.0), 7.0, &mut r).unwrap(),
            3
        );
        assert_eq!(
            empirical_count(&DistributionSpec::gamma(2.0, 0.5), 0.0, &mut r).unwrap(),
            0
        );
    }

    #[test]
    fn empirical_count_poisson_mean() {
        let mut r = rng(6);
        let spec = DistributionSpec::exponential(1.0);
        let paths = 10_000;
        let total: u64 = (0..paths)
            .map(|_| empirical_count(&spec, 100.0, &mut r).unwrap())
            .sum();
        let mean = total as f64 / paths as f64;
        assert!((mean - 100.0).abs() < 1.0, "mean count {mean}");
    }

    #[test]
    fn stream_arrivals_strictly_increase_and_reproduce() {
        let spec = DistributionSpec::uniform(0.0, 1.5);
        let seed = derive_seed(9, "stream", &[0]);
        let mut a = RenewalStream::new(spec, seed).unwrap();
        let mut b = RenewalStream::new(spec, seed).unwrap();
        let mut prev = 0.0;
        for _ in 0..1000 {
            let ta = a.next_arrival();
            assert_eq!(ta, b.next_arrival());
            assert!(ta > prev);
            prev = ta;
            a.advance();
            b.advance();
        }
    }

    #[test]
    fn distinct_stream_identities_are_uncorrelated() {
        let spec = DistributionSpec::exponential(1.0);
        let mut a = RenewalStream::new(spec, derive_seed(9, "stream", &[0])).unwrap();
        let mut b = RenewalStream::new(spec, derive_seed(9, "stream", &[1])).unwrap();
        let mut same = 0;
        for _ in 0..100 {
            if (a.next_arrival() - b.next_arrival()).abs() < 1e-12 {
                same += 1;
            }
            a.advance();
            b.advance();
        }
        assert_eq!(same, 0);
    }

    #[test]
    fn spec_serializes_as_tagged_record() {
        let spec = DistributionSpec::gamma(2.0, 0.5);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"gamma","shape":2.0,"scale":0.5}"#);
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
