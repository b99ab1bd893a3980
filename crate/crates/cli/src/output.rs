//! Result files: CSV tables, JSON reports and the reproduction manifest.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use ringage_core::experiments::{PreemptionStudy, RegimeStudy, SweepResult};
use ringage_core::{RingConfig, RingTopology};

pub const MANIFEST_SCHEMA: &str = "ringage.manifest/1";
pub const REPORT_SCHEMA: &str = "ringage.report/1";

/// Everything needed to reproduce a result file exactly.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub artifact_version: &'static str,
    pub subcommand: String,
    pub master_seed: u64,
    pub started_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Fully resolved configuration (flag overrides applied).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RingConfig>,
    /// Subcommand-specific parameters.
    pub params: serde_json::Value,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        master_seed: u64,
        config: Option<&RingConfig>,
        params: serde_json::Value,
        jobs: Option<usize>,
    ) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA,
            artifact_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            master_seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            jobs,
            config: config.cloned(),
            params,
        }
    }

    /// Write as `<file stem>.manifest.json` next to a result file.
    pub fn write_alongside(&self, result_path: &Path) -> io::Result<()> {
        let mut path = result_path.to_path_buf();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "result".into());
        path.set_file_name(format!("{stem}.manifest.json"));
        self.write_to(&path)
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}

/// Wrap a study payload in the versioned report envelope.
pub fn report_envelope<T: Serialize>(kind: &str, payload: &T) -> serde_json::Value {
    json!({
        "schema": REPORT_SCHEMA,
        "kind": kind,
        "result": payload,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row per (n, trial) plus a summary row per n.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "row,n,trial,seed,node,time_average_age,se_age,acceptances,source_accepts,\
         gossip_accepts,mean_peak,mean_valley,mean_transit,mean_inter_arrival,\
         mean_gossip_hops,long_path_fraction,final_source_version,events"
    )?;
    for r in &result.replicas {
        writeln!(
            out,
            "trial,{},{},{},{},{},,{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.trial,
            r.seed,
            r.node,
            r.time_average_age,
            r.acceptances,
            r.source_accepts,
            r.gossip_accepts,
            r.mean_peak,
            r.mean_valley,
            r.mean_transit,
            opt(r.mean_inter_arrival),
            opt(r.mean_gossip_hops),
            opt(r.long_path_fraction),
            r.final_source_version,
            r.events
        )?;
    }
    for p in &result.per_n {
        writeln!(
            out,
            "summary,{},,,,{},{},{},,,{},{},{},{},,,,",
            p.n,
            p.mean_age,
            p.se_age,
            p.mean_acceptances,
            p.mean_peak,
            p.mean_valley,
            p.mean_transit,
            p.mean_inter_arrival
        )?;
    }
    out.flush()
}

pub fn write_regimes_csv(path: &Path, study: &RegimeStudy) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "rule,n,k,mean_wait,se_wait,wait_samples,analytic_wait,window_fraction,\
         se_window_fraction,mean_inwindow_inter_arrival"
    )?;
    for r in &study.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.rule,
            r.n,
            r.k,
            r.mean_wait,
            r.se_wait,
            r.wait_samples,
            r.analytic_wait,
            r.window_fraction,
            r.se_window_fraction,
            opt(r.mean_inwindow_inter_arrival)
        )?;
    }
    out.flush()
}

pub fn write_preempt_csv(path: &Path, study: &PreemptionStudy) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "n,long_path_fraction,se_long_path_fraction,mean_hops,se_hops,gossip_accepts"
    )?;
    for r in &study.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n, r.long_path_fraction, r.se_long_path_fraction, r.mean_hops, r.se_hops, r.gossip_accepts
        )?;
    }
    out.flush()
}

/// Edge list with per-edge law and closed-form moments. Parameters are
/// space-separated `name=value` pairs so the CSV stays comma-clean.
pub fn write_topo_csv(path: &Path, topo: &RingTopology) -> io::Result<()> {
    use ringage_core::DistributionSpec as D;
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "src,dst,kind,params,mean,variance")?;
    for e in topo.edges() {
        let (kind, params) = match e.spec {
            D::Exponential { rate } => ("exponential", format!("rate={rate}")),
            D::Gamma { shape, scale } => ("gamma", format!("shape={shape} scale={scale}")),
            D::Uniform { lo, hi } => ("uniform", format!("lo={lo} hi={hi}")),
            D::Deterministic { period } => ("deterministic", format!("period={period}")),
            D::Lognormal { mu_log, sigma_log } => {
                ("lognormal", format!("mu_log={mu_log} sigma_log={sigma_log}"))
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.src,
            e.dst,
            kind,
            params,
            e.spec.mean(),
            e.spec.variance()
        )?;
    }
    out.flush()
}
