//! `ringage` — configuration-driven front end for the ring gossip
//! version-age simulator.
//!
//! Subcommands: `simulate` (one replica, optional event trace), `sweep`
//! (scaling study with log-log fit), `regimes` (spatial window study),
//! `preempt` (bi-directional long-path study), `lemma1` (renewal count
//! sandwich check), `topo` (edge-list dump). Every result file is paired
//! with a `*.manifest.json` that reproduces it exactly.

mod output;
mod specparse;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use output::{report_envelope, write_json, RunManifest};
use ringage_core::engine::TraceWriter;
use ringage_core::experiments::RegimeStudy;
use ringage_core::{
    build_ring, instrument, lemma1_check, preemption_study, regime_study, run_sweep,
    Error as CoreError, HorizonRule, InstrumentOptions, KRule, RingConfig, Simulation, SweepPlan,
};

#[derive(Parser)]
#[command(name = "ringage", version, about = "Version age of information in ring gossip networks")]
struct Cli {
    /// Worker threads for replica-parallel commands (default: all cores).
    #[arg(long, global = true, env = "RINGAGE_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replica and write its acceptance records as CSV.
    Simulate(SimulateArgs),
    /// Scaling sweep over ring sizes with a log-log fit of mean age.
    Sweep(SweepArgs),
    /// Spatial window study: waiting times into V_k and window fractions.
    Regimes(RegimesArgs),
    /// Long-path preemption study on bi-directional rings.
    Preempt(PreemptArgs),
    /// Monte Carlo check of the renewal count sandwich bounds.
    Lemma1(Lemma1Args),
    /// Dump the resolved topology as an edge-list CSV.
    Topo(TopoArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration with sections {ring, source, edges, sim, track}.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Simulation horizon; overrides the config's `sim.horizon`.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output CSV of acceptance records at the tracked nodes.
    #[arg(long)]
    out: PathBuf,
    /// Also write a full event trace CSV (off by default: it is large).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Ring sizes, comma-separated (e.g. 16,64,256,1024).
    #[arg(long)]
    ns: String,
    /// Independent replicas per ring size.
    #[arg(long, default_value_t = 8)]
    trials: usize,
    /// Horizon = MULT * sqrt(n).
    #[arg(long, default_value_t = 1500.0)]
    horizon_mult: f64,
    /// Use one fixed horizon for every n instead of the sqrt rule.
    #[arg(long, conflicts_with = "horizon_mult")]
    fixed_horizon: Option<f64>,
    /// Output directory for sweep.csv, report.json and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RegimesArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Window rules, comma-separated: `sqrt`, `2*sqrt`, `n^0.25`, `c*n^p`.
    #[arg(long, default_value = "n^0.25,sqrt,2*sqrt,n^0.75")]
    k_rules: String,
}

#[derive(Args)]
struct PreemptArgs {
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct Lemma1Args {
    /// Source inter-generation law, e.g. `exponential:1` or `gamma:2:0.5`.
    #[arg(long)]
    dist: String,
    /// Horizon sampler: `const:10`, `exp:10`, or `sum:100:exponential:1`.
    #[arg(long)]
    t: String,
    /// Total counting paths (two independent paths per drawn T).
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopoArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Errors with distinct diagnostics and exit codes.
enum CliError {
    /// Unreadable or unparsable configuration file (exit 3).
    MalformedConfig(String),
    /// Parameters outside their valid ranges (exit 4).
    InvalidParams(String),
    /// Filesystem failures (exit 5).
    Io(String),
    /// Anything else (exit 1).
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::MalformedConfig(_) => 3,
            CliError::InvalidParams(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::MalformedConfig(m)
            | CliError::InvalidParams(m)
            | CliError::Io(m)
            | CliError::Other(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Domain(_) => CliError::InvalidParams(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Affects every rayon-parallel study in this process.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, cli.jobs),
        Command::Sweep(args) => cmd_sweep(args, cli.jobs),
        Command::Regimes(args) => cmd_regimes(args, cli.jobs),
        Command::Preempt(args) => cmd_preempt(args, cli.jobs),
        Command::Lemma1(args) => cmd_lemma1(args, cli.jobs),
        Command::Topo(args) => cmd_topo(args, cli.jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Load the configuration and apply flag overrides (flag > config > default).
fn load_config(args: &ConfigArgs) -> Result<RingConfig, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::MalformedConfig(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut config: RingConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::MalformedConfig(format!("cannot parse {}: {e}", args.config.display()))
    })?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    config.validate()?;
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let mut config = load_config(&args.config)?;
    if let Some(h) = args.horizon {
        config = config.with_horizon(h);
        config.validate()?;
    }

    let mut sim = Simulation::new(&config)?;
    let mut acc =
        ringage_core::AgeAccumulator::from_config(&config, InstrumentOptions::default());
    let summary = match &args.trace {
        Some(trace_path) => {
            let file = fs::File::create(trace_path)?;
            let mut trace = TraceWriter::new(std::io::BufWriter::new(file));
            let summary = {
                let mut both = (&mut acc, &mut trace);
                sim.run(&mut both)
            };
            trace.into_inner()?;
            summary
        }
        None => sim.run(&mut acc),
    };

    let mut records = Vec::new();
    let mut node_summaries = Vec::new();
    for node in acc.tracked() {
        records.extend_from_slice(acc.records(node)?);
        let stats = acc.stream_stats(node)?;
        node_summaries.push(json!({
            "node": node,
            "time_average_age": acc.time_average_age(node).ok(),
            "acceptances": acc.acceptance_count(node)?,
            "source_accepts": stats.source_accepts,
            "gossip_accepts": stats.gossip_accepts,
            "mean_peak": stats.peak.mean(),
            "mean_valley": stats.valley.mean(),
            "mean_transit": stats.transit.mean(),
            "mean_inter_arrival": stats.inter_arrival.mean(),
            "mean_gossip_hops": stats.gossip_hops.mean(),
        }));
    }
    let mut out = std::io::BufWriter::new(fs::File::create(&args.out)?);
    instrument::write_records_csv(&mut out, &records)?;
    drop(out);

    let summary_path = {
        let stem = args
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        args.out.with_file_name(format!("{stem}.summary.json"))
    };
    write_json(
        &summary_path,
        &report_envelope("simulate", &json!({ "engine": &summary, "nodes": node_summaries })),
    )?;

    RunManifest::new(
        "simulate",
        config.sim.seed,
        Some(&config),
        json!({ "out": args.out.display().to_string(), "trace": args.trace.is_some() }),
        jobs,
    )
    .write_alongside(&args.out)?;

    eprintln!(
        "simulate: n={} {} events={} acceptances={} -> {} (+ summary, manifest)",
        config.n(),
        config.direction(),
        summary.counts.total(),
        records.len(),
        args.out.display()
    );
    Ok(())
}

fn build_plan(args: &SweepArgs) -> Result<(SweepPlan, serde_json::Value), CliError> {
    let config = load_config(&args.config)?;
    let ns = specparse::parse_ns(&args.ns).map_err(CliError::InvalidParams)?;
    let horizon = match args.fixed_horizon {
        Some(h) => HorizonRule::Fixed(h),
        None => HorizonRule::SqrtMultiple(args.horizon_mult),
    };
    let seed = config.sim.seed;
    let plan = SweepPlan::new(config, ns.clone(), args.trials, seed).with_horizon(horizon);
    plan.validate()?;
    let params = json!({
        "ns": ns,
        "trials": args.trials,
        "horizon": horizon,
    });
    Ok((plan, params))
}

fn cmd_sweep(args: &SweepArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let (plan, params) = build_plan(args)?;
    ensure_dir(&args.out_dir)?;
    let result = run_sweep(&plan)?;

    output::write_sweep_csv(&args.out_dir.join("sweep.csv"), &result)?;
    write_json(&args.out_dir.join("report.json"), &report_envelope("sweep", &result))?;
    RunManifest::new("sweep", plan.master_seed, Some(&plan.base), params, jobs)
        .write_to(&args.out_dir.join("manifest.json"))?;

    if let Some(s) = &result.scaling {
        eprintln!(
            "sweep: slope={:.4} r2={:.4} over {} sizes x {} trials -> {}",
            s.fit.slope,
            s.fit.r_squared,
            plan.ns.len(),
            plan.trials,
            args.out_dir.display()
        );
    } else {
        eprintln!(
            "sweep: {} sizes x {} trials (too few sizes for a fit) -> {}",
            plan.ns.len(),
            plan.trials,
            args.out_dir.display()
        );
    }
    Ok(())
}

fn cmd_regimes(args: &RegimesArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let (plan, mut params) = build_plan(&args.sweep)?;
    let rules = specparse::parse_k_rules(&args.k_rules).map_err(CliError::InvalidParams)?;
    params["k_rules"] = json!(rules.iter().map(KRule::label).collect::<Vec<_>>());
    ensure_dir(&args.sweep.out_dir)?;
    let study: RegimeStudy = regime_study(&plan, &rules)?;

    output::write_regimes_csv(&args.sweep.out_dir.join("regimes.csv"), &study)?;
    write_json(
        &args.sweep.out_dir.join("report.json"),
        &report_envelope("regimes", &study),
    )?;
    RunManifest::new("regimes", plan.master_seed, Some(&plan.base), params, jobs)
        .write_to(&args.sweep.out_dir.join("manifest.json"))?;

    eprintln!(
        "regimes: {} rows -> {}",
        study.rows.len(),
        args.sweep.out_dir.display()
    );
    Ok(())
}

fn cmd_preempt(args: &PreemptArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let (plan, params) = build_plan(&args.sweep)?;
    ensure_dir(&args.sweep.out_dir)?;
    let study = preemption_study(&plan)?;

    output::write_preempt_csv(&args.sweep.out_dir.join("preempt.csv"), &study)?;
    write_json(
        &args.sweep.out_dir.join("report.json"),
        &report_envelope("preempt", &study),
    )?;
    RunManifest::new("preempt", plan.master_seed, Some(&plan.base), params, jobs)
        .write_to(&args.sweep.out_dir.join("manifest.json"))?;

    eprintln!(
        "preempt: hops slope={:.4} over {} sizes -> {}",
        study.hops_fit.slope,
        study.rows.len(),
        args.sweep.out_dir.display()
    );
    Ok(())
}

fn cmd_lemma1(args: &Lemma1Args, jobs: Option<usize>) -> Result<(), CliError> {
    let dist = specparse::parse_dist(&args.dist).map_err(CliError::InvalidParams)?;
    let sampler = specparse::parse_t_sampler(&args.t).map_err(CliError::InvalidParams)?;
    let report = lemma1_check(&dist, &sampler, args.trials / 2, args.seed)?;
    let envelope = report_envelope("lemma1", &report);
    println!("{}", serde_json::to_string_pretty(&envelope).expect("report serializes"));
    if let Some(out) = &args.out {
        write_json(out, &envelope)?;
        RunManifest::new(
            "lemma1",
            args.seed,
            None,
            json!({ "dist": args.dist, "t": args.t, "trials": args.trials }),
            jobs,
        )
        .write_alongside(out)?;
    }
    Ok(())
}

fn cmd_topo(args: &TopoArgs, jobs: Option<usize>) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let topo = build_ring(&config)?;
    output::write_topo_csv(&args.out, &topo)?;
    RunManifest::new(
        "topo",
        config.sim.seed,
        Some(&config),
        json!({ "edges": topo.edges().len() }),
        jobs,
    )
    .write_alongside(&args.out)?;
    eprintln!("topo: {} edges -> {}", topo.edges().len(), args.out.display());
    Ok(())
}
