//! `mrtrace`: analyze, synthesize and replay MapReduce job traces.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 when the trace or
//! an analysis fails.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mrtrace::cache::{
    access_stream, simulate_cache, sweep, write_sweep_tsv, Admission, CacheConfig, Eviction,
};
use mrtrace::cluster::ElbowConfig;
use mrtrace::replay::{sim_occupancy_series, simulate, Scheduler, SimConfig};
use mrtrace::report::{
    analyze_groups, render_json, write_atomic, write_plots, AnalysisOptions, Group, DEFAULT_SEED,
};
use mrtrace::stats::{mean, median};
use mrtrace::synthesis::{
    build_workload_model, data_prepopulation_plan, synthesize, Mode, SyntheticWorkload,
};
use mrtrace::{parse_trace, Format, ParseOptions, Trace};

#[derive(Parser)]
#[command(
    name = "mrtrace",
    version,
    about = "Characterize, synthesize and replay MapReduce job traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace file in JSON Lines or CSV
    #[arg(long)]
    trace: PathBuf,
    /// Input format; inferred from the file extension by default
    #[arg(long, value_parser = ["jsonl", "csv"])]
    format: Option<String>,
    /// Label recorded in reports
    #[arg(long)]
    label: Option<String>,
    /// Machines in the traced cluster
    #[arg(long, default_value_t = 1)]
    machines: u32,
}

#[derive(Args)]
struct SeedArg {
    /// Seed for every randomized step
    #[arg(long, env = "MRTRACE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Report path; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for figure-shaped TSV files
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Time-series bucket width in seconds
    #[arg(long, default_value_t = 3600)]
    bucket_width: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run every applicable analysis and write the full report
    Analyze {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Percentile-to-median burstiness curves with sine references
    Burstiness {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// k-means job types over six per-job dimensions
    Cluster {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        report: ReportArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Use this many clusters instead of the elbow rule
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Minimum relative residual-variance gain for adding a cluster
        #[arg(long, default_value_t = 0.10)]
        threshold: f64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Job-name first-word breakdowns by jobs, I/O bytes and task time
    Names {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        report: ReportArgs,
        /// Words below this share are folded into "other"
        #[arg(long, default_value_t = 0.01)]
        cutoff: f64,
    },
    /// Synthesize a scaled-down workload from the trace
    Synthesize {
        #[command(flatten)]
        trace: TraceArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Machines in the target cluster
        #[arg(long)]
        target_machines: u32,
        /// Target span in seconds; defaults to the source span
        #[arg(long)]
        span: Option<u64>,
        #[arg(long, default_value = "sampled", value_parser = ["sampled", "replay_scaled"])]
        mode: String,
        /// Sampling window width in seconds
        #[arg(long, default_value_t = 3600)]
        window: u64,
        /// Output workload in JSON Lines
        #[arg(long)]
        out: PathBuf,
        /// Data pre-population plan (TSV)
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Replay a workload on a simulated slot cluster
    Simulate {
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long)]
        nodes: u32,
        /// Map slots per node
        #[arg(long, default_value_t = 1)]
        map_slots: u32,
        /// Reduce slots per node
        #[arg(long, default_value_t = 1)]
        reduce_slots: u32,
        #[arg(long, default_value = "fifo", value_parser = ["fifo", "fair"])]
        scheduler: String,
        /// Occupancy bucket width in seconds
        #[arg(long, default_value_t = 3600)]
        bucket_width: u64,
        /// Result summary path; printed to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Occupancy series (TSV)
        #[arg(long)]
        occupancy: Option<PathBuf>,
    },
    /// Replay the trace's file accesses through a whole-file cache
    Cachesim {
        #[command(flatten)]
        trace: TraceArgs,
        /// Cache capacity, e.g. 500GB
        #[arg(long, value_parser = parse_bytes)]
        capacity: Option<u64>,
        /// Admit only files at most this large
        #[arg(long, value_parser = parse_bytes)]
        admit_max: Option<u64>,
        /// Evict files idle for longer than this many seconds
        #[arg(long)]
        ttl: Option<f64>,
        /// Comma-separated capacities to sweep
        #[arg(long, value_parser = parse_bytes, value_delimiter = ',', conflicts_with = "sweep_thresholds")]
        sweep_capacities: Option<Vec<u64>>,
        /// Comma-separated admission thresholds to sweep at --capacity
        #[arg(long, value_parser = parse_bytes, value_delimiter = ',')]
        sweep_thresholds: Option<Vec<u64>>,
        /// Output path; printed to stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A command line that parsed but cannot be run as given.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Byte counts with optional binary suffix: `512`, `64KB`, `1.5G`, `2TiB`.
fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let split = t.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(t.len());
    let (number, unit) = t.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("not a byte count: `{s}`"))?;
    let shift = match unit
        .trim()
        .to_ascii_uppercase()
        .trim_end_matches("IB")
        .trim_end_matches('B')
    {
        "" => 0,
        "K" => 10,
        "M" => 20,
        "G" => 30,
        "T" => 40,
        "P" => 50,
        _ => return Err(format!("unknown unit in `{s}`")),
    };
    if !(value >= 0.0 && value.is_finite()) {
        return Err(format!("not a byte count: `{s}`"));
    }
    Ok((value * (1u64 << shift) as f64).round() as u64)
}

fn load(args: &TraceArgs) -> Result<Trace> {
    let format = match args.format.as_deref() {
        Some(f) => f.parse::<Format>()?,
        None => Format::from_path(&args.trace),
    };
    let file =
        File::open(&args.trace).with_context(|| format!("cannot open {}", args.trace.display()))?;
    let opts = ParseOptions {
        label: args.label.clone().unwrap_or_else(|| {
            args.trace
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "trace".into())
        }),
        machine_count: args.machines,
    };
    parse_trace(BufReader::new(file), format, &opts)
        .with_context(|| format!("cannot read {}", args.trace.display()))
}

/// Writes `contents` atomically to `path`, or to stdout without one.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents.as_bytes())
            .with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn report(
    trace: &TraceArgs,
    args: &ReportArgs,
    opts: AnalysisOptions,
    groups: &[Group],
) -> Result<()> {
    if args.bucket_width == 0 {
        return Err(usage("--bucket-width must be positive"));
    }
    let trace = load(trace)?;
    let analysis = analyze_groups(
        &trace,
        &AnalysisOptions {
            bucket_width: args.bucket_width,
            ..opts
        },
        groups,
    );
    let rendered = analysis.render();
    if let Some(dir) = &args.plots {
        write_plots(dir, &analysis.plots)
            .with_context(|| format!("cannot write plots to {}", dir.display()))?;
    }
    emit(args.out.as_deref(), &rendered)?;
    for name in analysis.skipped() {
        eprintln!("skipped section {name}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            trace,
            report: r,
            seed,
        } => report(
            &trace,
            &r,
            AnalysisOptions {
                seed: seed.seed,
                ..AnalysisOptions::default()
            },
            &Group::ALL,
        ),
        Command::Burstiness { trace, report: r } => report(
            &trace,
            &r,
            AnalysisOptions::default(),
            &[Group::TimeSeries, Group::Burstiness],
        ),
        Command::Cluster {
            trace,
            report: r,
            seed,
            k,
            k_max,
            threshold,
            restarts,
        } => {
            if k == Some(0) || k_max == 0 || restarts == 0 {
                return Err(usage("--k, --k-max and --restarts must be positive"));
            }
            let opts = AnalysisOptions {
                seed: seed.seed,
                cluster_k: k,
                elbow: ElbowConfig {
                    k_max,
                    improvement_threshold: threshold,
                    restarts,
                },
                ..AnalysisOptions::default()
            };
            report(&trace, &r, opts, &[Group::Clusters])
        }
        Command::Names {
            trace,
            report: r,
            cutoff,
        } => {
            if !(0.0..=1.0).contains(&cutoff) {
                return Err(usage("--cutoff must be in [0, 1]"));
            }
            let opts = AnalysisOptions {
                name_cutoff: cutoff,
                ..AnalysisOptions::default()
            };
            report(&trace, &r, opts, &[Group::Names])
        }
        Command::Synthesize {
            trace,
            seed,
            target_machines,
            span,
            mode,
            window,
            out,
            plan,
        } => {
            if target_machines == 0 || window == 0 || span == Some(0) {
                return Err(usage(
                    "--target-machines, --window and --span must be positive",
                ));
            }
            let mode: Mode = mode.parse()?;
            let source = load(&trace)?;
            let model = build_workload_model(&source, window)?;
            let span = span.unwrap_or(model.span_seconds());
            let workload = synthesize(&model, target_machines, span, mode, seed.seed)?;
            let data_plan = data_prepopulation_plan(&workload)?;

            let mut jsonl = Vec::new();
            workload.write_jsonl(&mut jsonl)?;
            let mut plan_tsv = Vec::new();
            data_plan.write_tsv(&mut plan_tsv)?;
            write_atomic(&out, &jsonl)
                .with_context(|| format!("cannot write {}", out.display()))?;
            if let Some(p) = &plan {
                write_atomic(p, &plan_tsv)
                    .with_context(|| format!("cannot write {}", p.display()))?;
            }
            let summary = json!({
                "mode": mode.as_str(),
                "seed": seed.seed,
                "source_jobs": source.len(),
                "excluded_source_jobs": model.excluded,
                "source_machine_count": model.source_machine_count,
                "target_machine_count": target_machines,
                "scale_factor": workload.scale_factor,
                "span_seconds": span,
                "window_seconds": window,
                "jobs": workload.len(),
                "plan_files": data_plan.files.len(),
                "plan_total_bytes": data_plan.total_bytes,
                "notes": data_plan.notes,
            });
            emit(None, &render_json(&summary))
        }
        Command::Simulate {
            trace,
            nodes,
            map_slots,
            reduce_slots,
            scheduler,
            bucket_width,
            out,
            occupancy,
        } => {
            if nodes == 0 || map_slots == 0 || reduce_slots == 0 || bucket_width == 0 {
                return Err(usage(
                    "--nodes, --map-slots, --reduce-slots and --bucket-width must be positive",
                ));
            }
            let config = SimConfig {
                nodes,
                map_slots_per_node: map_slots,
                reduce_slots_per_node: reduce_slots,
                scheduler: scheduler.parse::<Scheduler>()?,
            };
            let source = load(&trace)?;
            let (workload, excluded) = SyntheticWorkload::from_trace(&source)?;
            let result = simulate(&workload, &config)?;
            let series = sim_occupancy_series(&result, bucket_width)?;
            let latency: Vec<f64> = result
                .jobs
                .iter()
                .map(|j| j.completion - j.submit)
                .collect();
            let wait: Vec<f64> = result
                .jobs
                .iter()
                .map(|j| j.first_task_start - j.submit)
                .collect();
            let summary = json!({
                "config": config,
                "jobs": result.jobs.len(),
                "excluded_jobs": excluded,
                "makespan_seconds": result.makespan,
                "busy_map_slot_seconds": result.busy_map_slot_seconds,
                "busy_reduce_slot_seconds": result.busy_reduce_slot_seconds,
                "mean_latency_seconds": mean(&latency),
                "median_latency_seconds": median(&latency),
                "mean_wait_seconds": mean(&wait),
                "peak_bucket_occupancy": series.values.iter().cloned().fold(0.0, f64::max),
                "total_slots": config.map_slots() + config.reduce_slots(),
            });
            if let Some(p) = &occupancy {
                let mut tsv = String::from("bucket_start\tactive_slots\n");
                for (i, v) in series.values.iter().enumerate() {
                    let start = series.start + (i as u64 * bucket_width) as i64;
                    tsv.push_str(&format!("{start}\t{}\n", mrtrace::report::round_sig(*v)));
                }
                write_atomic(p, tsv.as_bytes())
                    .with_context(|| format!("cannot write {}", p.display()))?;
            }
            emit(out.as_deref(), &render_json(&summary))
        }
        Command::Cachesim {
            trace,
            capacity,
            admit_max,
            ttl,
            sweep_capacities,
            sweep_thresholds,
            out,
        } => {
            let eviction = match ttl {
                Some(t) if t > 0.0 => Eviction::IdleTtl(t),
                Some(_) => return Err(usage("--ttl must be positive")),
                None => Eviction::Lru,
            };
            let admission = match admit_max {
                Some(t) => Admission::SizeAtMost(t),
                None => Admission::All,
            };
            let source = load(&trace)?;
            if let Some(capacities) = sweep_capacities {
                let configs: Vec<CacheConfig> = capacities
                    .iter()
                    .map(|&c| CacheConfig {
                        capacity_bytes: c,
                        admission,
                        eviction,
                    })
                    .collect();
                let stream = access_stream(&source)?;
                let reports = sweep(&stream, &configs)?;
                let rows: Vec<_> = capacities.into_iter().zip(reports).collect();
                let mut tsv = Vec::new();
                write_sweep_tsv(&mut tsv, "capacity_bytes", &rows)?;
                return emit(out.as_deref(), &String::from_utf8(tsv)?);
            }
            let capacity = capacity.ok_or_else(|| {
                usage("--capacity is required unless --sweep-capacities is given")
            })?;
            if let Some(thresholds) = sweep_thresholds {
                let configs: Vec<CacheConfig> = thresholds
                    .iter()
                    .map(|&t| CacheConfig {
                        capacity_bytes: capacity,
                        admission: Admission::SizeAtMost(t),
                        eviction,
                    })
                    .collect();
                let stream = access_stream(&source)?;
                let reports = sweep(&stream, &configs)?;
                let rows: Vec<_> = thresholds.into_iter().zip(reports).collect();
                let mut tsv = Vec::new();
                write_sweep_tsv(&mut tsv, "threshold_bytes", &rows)?;
                return emit(out.as_deref(), &String::from_utf8(tsv)?);
            }
            let config = CacheConfig {
                capacity_bytes: capacity,
                admission,
                eviction,
            };
            let stream = access_stream(&source)?;
            let result = simulate_cache(&stream, &config)?;
            emit(
                out.as_deref(),
                &render_json(&json!({"config": config, "report": result})),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nUsage: mrtrace <COMMAND> [OPTIONS]; see `mrtrace --help`");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
