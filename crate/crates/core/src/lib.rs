//! Discrete-event simulator and experiment harness for version age of
//! information in ring gossip networks.
//!
//! A source generates versioned updates on a renewal process and delivers
//! them to a ring of `n` nodes as per-node Poisson processes; neighbors push
//! their current version to each other on independent, heterogeneous renewal
//! processes. The crate simulates these dynamics exactly, instruments the
//! sample-path observables of a tracked node (age peaks and valleys, transit
//! times, inter-arrival gaps, entry windows), and packages the statistical
//! studies used to measure how the long-run average age scales with n.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod instrument;
pub mod network;
pub mod renewal;
pub mod seed;

pub use engine::{Acceptance, NullObserver, Observer, RunSummary, Simulation};
pub use error::{Error, Result};
pub use experiments::{
    fit_loglog, lemma1_check, preemption_study, regime_study, run_replica, run_sweep, HorizonRule,
    KRule, Lemma1Report, PowerLawFit, ScalingFit, SweepPlan, SweepResult, TSampler,
};
pub use instrument::{
    long_path_fraction, peak_valley_stats, window_fraction, AgeAccumulator, InstrumentOptions,
    TransitRecord,
};
pub use network::{
    build_ring, upstream_window, BurnIn, Direction, EdgeLaw, RingConfig, RingTopology,
};
pub use renewal::{
    empirical_count, expected_count_bounds, sample_interarrival, DistributionSpec, RenewalStream,
};
