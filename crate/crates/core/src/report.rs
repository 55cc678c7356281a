//! End-to-end analysis report and figure-shaped plot files.
//!
//! Every section is either `{status: "ok", operation, parameters, result}`
//! or `{status: "skipped: <why>", reason}`. Sections are computed in
//! parallel and merged in a fixed order; JSON objects have sorted keys and
//! floats are rounded to 9 significant digits, so identical inputs give
//! byte-identical output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::access::{
    access_frequency_rank, access_vs_size_curves, data_size_cdf, eighty_x_from_entries, fit_zipf,
    fit_zipf_trimmed, reaccess_intervals, RankedAccessTable,
};
use crate::cluster::{
    best_of_restarts, job_feature_vectors, kmeans_from_centroids, render_cluster_table,
    select_k_rows, summarize_clusters, ElbowConfig, KSelection, Row, FEATURE_NAMES,
};
use crate::error::{Error, Result};
use crate::names::{name_breakdown, Weighting};
use crate::stats::{percentile_sorted, sorted, EmpiricalCdf};
use crate::temporal::{
    bucket_time_series, burstiness_curve, default_percentile_grid, dimension_correlations,
    periodogram, sine_reference, zero_runs, Dimension, SineKind, TimeSeries, HOUR,
};
use crate::trace::{validate, Side, SizeDimension, Trace};

pub const TOOL_NAME: &str = "mrtrace";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 42;

/// Plot CDFs are thinned to about this many points.
pub const MAX_PLOT_POINTS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisOptions {
    pub bucket_width: u64,
    pub seed: u64,
    pub eighty_x_quantile: f64,
    pub zipf_trim_min_count: u64,
    pub name_cutoff: f64,
    pub periodogram_top_k: usize,
    pub elbow: ElbowConfig,
    /// k is chosen on a uniform subsample of at most this many jobs.
    pub elbow_sample_rows: usize,
    /// Runs of at least this many empty buckets are reported as gaps.
    pub gap_min_buckets: usize,
    /// Fixed cluster count; the elbow rule picks one when `None`.
    pub cluster_k: Option<usize>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            bucket_width: HOUR,
            seed: DEFAULT_SEED,
            eighty_x_quantile: 0.8,
            zipf_trim_min_count: 2,
            name_cutoff: crate::names::DEFAULT_CUTOFF,
            periodogram_top_k: 5,
            elbow: ElbowConfig::default(),
            elbow_sample_rows: 10_000,
            gap_min_buckets: 6,
            cluster_k: None,
        }
    }
}

/// Groups of report sections; `analyze` runs all of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    DataSizes,
    Access,
    Reaccess,
    TimeSeries,
    Burstiness,
    Correlations,
    Periodogram,
    Names,
    Clusters,
}

impl Group {
    pub const ALL: [Group; 9] = [
        Group::DataSizes,
        Group::Access,
        Group::Reaccess,
        Group::TimeSeries,
        Group::Burstiness,
        Group::Correlations,
        Group::Periodogram,
        Group::Names,
        Group::Clusters,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotFile {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub report: Value,
    pub plots: Vec<PlotFile>,
}

impl Analysis {
    pub fn render(&self) -> String {
        render_json(&self.report)
    }

    /// Names of sections that were skipped.
    pub fn skipped(&self) -> Vec<String> {
        self.report["skipped"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|s| s["section"].as_str().map(String::from))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn section(&self, name: &str) -> Option<&Value> {
        self.report["sections"].get(name)
    }
}

#[derive(Default)]
struct Output {
    sections: Vec<(String, Value)>,
    plots: Vec<PlotFile>,
}

impl Output {
    fn ok(&mut self, name: impl Into<String>, operation: &str, parameters: Value, result: Value) {
        self.sections.push((
            name.into(),
            json!({"status": "ok", "operation": operation, "parameters": parameters, "result": result}),
        ));
    }

    fn skip(&mut self, name: impl Into<String>, err: &Error) {
        self.sections.push((
            name.into(),
            json!({"status": skip_status(err), "reason": err.to_string()}),
        ));
    }

    fn plot(&mut self, name: impl Into<String>, contents: String) {
        self.plots.push(PlotFile {
            name: name.into(),
            contents,
        });
    }
}

fn skip_status(err: &Error) -> &'static str {
    match err {
        Error::NoData(_) | Error::NoCompleteJobs => "skipped: missing field",
        _ => "skipped: insufficient data",
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and sorted keys, newline-terminated.
pub fn render_json(report: &Value) -> String {
    let mut v = report.clone();
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn tsv<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Keeps the first and last point and the last point of every
/// `1/MAX_PLOT_POINTS` step of cumulative fraction.
pub fn thin_cdf(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_PLOT_POINTS {
        return points.to_vec();
    }
    let step = |f: f64| (f * MAX_PLOT_POINTS as f64).floor() as usize;
    let mut out = vec![points[0]];
    for (i, p) in points.iter().enumerate().skip(1) {
        let last = i + 1 == points.len();
        if last || step(points[i + 1].1) != step(p.1) {
            out.push(*p);
        }
    }
    out
}

fn cdf_tsv(cdf: &EmpiricalCdf) -> String {
    tsv(
        &["value", "cumulative_fraction"],
        thin_cdf(&cdf.points)
            .into_iter()
            .map(|(v, f)| vec![num(v), num(f)]),
    )
}

fn cdf_summary(cdf: &EmpiricalCdf) -> Value {
    json!({
        "sample_count": cdf.sample_count,
        "distinct_values": cdf.points.len(),
        "p10": cdf.quantile(0.10),
        "p50": cdf.quantile(0.50),
        "p90": cdf.quantile(0.90),
        "p99": cdf.quantile(0.99),
        "max": cdf.points.last().map(|p| p.0),
    })
}

fn data_sizes(trace: &Trace, out: &mut Output) {
    for dim in SizeDimension::ALL {
        let name = format!("data_size.{}", dim.as_str());
        match data_size_cdf(trace, dim) {
            Ok(d) => {
                out.ok(
                    name,
                    "data_size_cdf",
                    json!({"dimension": dim.as_str()}),
                    json!({"excluded": d.excluded, "cdf": cdf_summary(&d.cdf)}),
                );
                out.plot(
                    format!("fig1_{}_size_cdf.tsv", dim.as_str()),
                    cdf_tsv(&d.cdf),
                );
            }
            Err(e) => out.skip(name, &e),
        }
    }
}

/// Rank/count rows: every rank up to 1000, then roughly 200 per decade.
fn rank_tsv(table: &RankedAccessTable) -> String {
    let n = table.entries.len();
    let mut rows = Vec::new();
    let mut last_bin = None;
    for (i, e) in table.entries.iter().enumerate() {
        let rank = i + 1;
        let bin = ((rank as f64).log10() * 200.0).floor() as i64;
        if rank <= 1000 || rank == n || Some(bin) != last_bin {
            rows.push(vec![rank.to_string(), e.access_count.to_string()]);
        }
        last_bin = Some(bin);
    }
    tsv(&["rank", "access_count"], rows)
}

fn access(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    for side in Side::BOTH {
        let s = side.as_str();
        let (fig_rank, fig_size) = match side {
            Side::Input => ("fig2_input_access_rank.tsv", "fig3_input"),
            Side::Output => ("fig2_output_access_rank.tsv", "fig4_output"),
        };
        match access_frequency_rank(trace, side) {
            Ok(table) => {
                let fit = fit_zipf(&table)
                    .map(|f| to_value(&f))
                    .unwrap_or_else(|e| json!({"error": e.to_string()}));
                let trimmed = fit_zipf_trimmed(&table, opts.zipf_trim_min_count)
                    .map(|f| to_value(&f))
                    .unwrap_or_else(|e| json!({"error": e.to_string()}));
                out.ok(
                    format!("access_rank.{s}"),
                    "access_frequency_rank+fit_zipf",
                    json!({"side": s, "axes": "log10 access count vs log10 rank", "trim_min_count": opts.zipf_trim_min_count}),
                    json!({
                        "files": table.len(),
                        "total_accesses": table.total_accesses(),
                        "top_access_count": table.entries.first().map(|e| e.access_count),
                        "zipf": fit,
                        "zipf_trimmed": trimmed,
                    }),
                );
                out.plot(fig_rank, rank_tsv(&table));

                let sized: Vec<_> = table
                    .entries
                    .iter()
                    .copied()
                    .filter(|e| e.size.is_some())
                    .collect();
                match eighty_x_from_entries(&sized, opts.eighty_x_quantile) {
                    Ok(x) => out.ok(
                        format!("eighty_x.{s}"),
                        "eighty_x_rule",
                        json!({"side": s, "access_quantile": opts.eighty_x_quantile}),
                        json!({"x_percent_of_bytes": x, "files_with_size": sized.len()}),
                    ),
                    Err(e) => out.skip(format!("eighty_x.{s}"), &e),
                }
            }
            Err(e) => {
                out.skip(format!("access_rank.{s}"), &e);
                out.skip(format!("eighty_x.{s}"), &e);
            }
        }
        match access_vs_size_curves(trace, side) {
            Ok(c) => {
                out.ok(
                    format!("access_vs_size.{s}"),
                    "access_vs_size_curves",
                    json!({"side": s, "file_size": "largest observed byte count"}),
                    json!({
                        "files": c.files,
                        "excluded_jobs": c.excluded_jobs,
                        "jobs_cdf": cdf_summary(&c.jobs_cdf),
                        "bytes_cdf": cdf_summary(&c.bytes_cdf),
                    }),
                );
                out.plot(format!("{fig_size}_jobs_cdf.tsv"), cdf_tsv(&c.jobs_cdf));
                out.plot(format!("{fig_size}_bytes_cdf.tsv"), cdf_tsv(&c.bytes_cdf));
            }
            Err(e) => out.skip(format!("access_vs_size.{s}"), &e),
        }
    }
}

fn reaccess(trace: &Trace, out: &mut Output) {
    match reaccess_intervals(trace) {
        Ok(r) => {
            let within_6h = r.interval_cdf.fraction_at(6.0 * HOUR as f64);
            out.ok(
                "reaccess",
                "reaccess_intervals",
                json!({"gaps": "submit-time gaps", "pre_existing": "input path seen earlier as an input or output"}),
                json!({
                    "intervals": cdf_summary(&r.interval_cdf),
                    "input_rereads": r.input_reread_cdf.sample_count,
                    "output_reuses": r.output_reuse_cdf.sample_count,
                    "fraction_within_6_hours": if r.interval_cdf.is_empty() { Value::Null } else { json!(within_6h) },
                    "reaccess_job_fraction": r.reaccess_job_fraction,
                    "jobs_with_input": r.jobs_with_input,
                }),
            );
            out.plot("fig5_reaccess_interval_cdf.tsv", cdf_tsv(&r.interval_cdf));
            out.plot("fig5_input_reread_cdf.tsv", cdf_tsv(&r.input_reread_cdf));
            out.plot("fig5_output_reuse_cdf.tsv", cdf_tsv(&r.output_reuse_cdf));
            out.plot(
                "fig6_preexisting_input.tsv",
                tsv(
                    &["jobs_with_input", "preexisting_input_fraction"],
                    [vec![
                        r.jobs_with_input.to_string(),
                        num(r.reaccess_job_fraction),
                    ]],
                ),
            );
        }
        Err(e) => out.skip("reaccess", &e),
    }
}

fn series_tsv(s: &TimeSeries) -> String {
    tsv(
        &["bucket_start", "value"],
        s.values.iter().enumerate().map(|(i, v)| {
            vec![
                (s.start + (i as u64 * s.bucket_width) as i64).to_string(),
                num(*v),
            ]
        }),
    )
}

fn time_series(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    for dim in Dimension::TRACE {
        let name = format!("time_series.{}", dim.as_str());
        match bucket_time_series(trace, dim, opts.bucket_width) {
            Ok(s) => {
                let v = sorted(&s.values);
                let gaps = zero_runs(&s, opts.gap_min_buckets);
                out.ok(
                    name,
                    if dim == Dimension::OccupancySlots {
                        "occupancy_series"
                    } else {
                        "bucket_time_series"
                    },
                    json!({"dimension": dim.as_str(), "bucket_width": s.bucket_width}),
                    json!({
                        "buckets": s.len(),
                        "start": s.start,
                        "total": s.total(),
                        "mean": s.total() / s.len() as f64,
                        "median": percentile_sorted(&v, 50.0),
                        "max": v.last(),
                        "excluded": s.excluded,
                        "empty_runs": gaps,
                    }),
                );
                out.plot(format!("fig7_{}.tsv", dim.as_str()), series_tsv(&s));
            }
            Err(e) => out.skip(name, &e),
        }
    }
}

fn curve_tsv(points: &[(f64, u32)]) -> String {
    tsv(
        &["ratio", "percentile"],
        points.iter().map(|(r, p)| vec![num(*r), p.to_string()]),
    )
}

fn burstiness(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    let grid = default_percentile_grid();
    let mut buckets = None;
    for dim in Dimension::TRACE {
        let name = format!("burstiness.{}", dim.as_str());
        let curve = bucket_time_series(trace, dim, opts.bucket_width).and_then(|s| {
            buckets.get_or_insert(s.len());
            burstiness_curve(&s, &grid)
        });
        match curve {
            Ok(c) => {
                let peak = c.ratio_at(100).unwrap_or(f64::NAN);
                out.ok(
                    name,
                    "burstiness_curve",
                    json!({"dimension": dim.as_str(), "bucket_width": opts.bucket_width, "percentiles": "1..=100", "interpolation": "linear between order statistics"}),
                    json!({
                        "median": c.median,
                        "peak_to_median": peak,
                        "p90_to_median": c.ratio_at(90),
                        "p10_to_median": c.ratio_at(10),
                    }),
                );
                if dim == Dimension::ComputeTimeTaskSeconds {
                    out.plot("fig8_burstiness_task_time.tsv", curve_tsv(&c.points));
                }
            }
            Err(e) => out.skip(name, &e),
        }
    }
    let n = buckets.unwrap_or(0).max(168);
    let mut refs = Map::new();
    for (kind, file) in [
        (SineKind::RangeEqualsMean, "fig8_sine_plus_2.tsv"),
        (SineKind::RangeEqualsTenthOfMean, "fig8_sine_plus_20.tsv"),
    ] {
        let c = sine_reference(kind, n)
            .and_then(|s| burstiness_curve(&s, &grid))
            .expect("sine references are valid");
        refs.insert(
            to_value(&kind).as_str().unwrap_or_default().to_string(),
            json!({"offset": kind.offset(), "peak_to_median": c.ratio_at(100), "p0_to_median": c.points[0].0}),
        );
        out.plot(file, curve_tsv(&c.points));
    }
    out.ok(
        "burstiness.sine_references",
        "sine_reference+burstiness_curve",
        json!({"buckets": n, "period_buckets": 24}),
        Value::Object(refs),
    );
}

fn correlations(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    match dimension_correlations(trace, opts.bucket_width) {
        Ok(m) => {
            out.ok(
                "correlations",
                "dimension_correlations",
                json!({"bucket_width": opts.bucket_width, "method": "pearson"}),
                to_value(&m),
            );
            out.plot(
                "fig9_correlations.tsv",
                tsv(
                    &["pair", "r"],
                    [
                        vec!["jobs_data".to_string(), num(m.r_jobs_data)],
                        vec!["jobs_compute".to_string(), num(m.r_jobs_compute)],
                        vec!["data_compute".to_string(), num(m.r_data_compute)],
                    ],
                ),
            );
        }
        Err(e) => out.skip("correlations", &e),
    }
}

fn periodograms(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    for dim in [
        Dimension::JobsSubmitted,
        Dimension::DataSizeBytes,
        Dimension::ComputeTimeTaskSeconds,
    ] {
        let name = format!("periodogram.{}", dim.as_str());
        match bucket_time_series(trace, dim, opts.bucket_width).and_then(|s| periodogram(&s, opts.periodogram_top_k)) {
            Ok(p) => out.ok(
                name,
                "periodogram",
                json!({"dimension": dim.as_str(), "bucket_width": opts.bucket_width, "top_k": opts.periodogram_top_k, "diurnal_min_power_fraction": crate::temporal::DIURNAL_POWER_FRACTION}),
                to_value(&p),
            ),
            Err(e) => out.skip(name, &e),
        }
    }
}

fn names(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    for w in Weighting::ALL {
        let name = format!("names.{}", w.as_str());
        match name_breakdown(trace, w, opts.name_cutoff) {
            Ok(b) => {
                let rows = b
                    .entries
                    .iter()
                    .map(|(word, share)| vec![word.clone(), num(*share)])
                    .chain(std::iter::once(vec![
                        "<other>".to_string(),
                        num(b.other_fraction),
                    ]));
                out.plot(
                    format!("fig10_names_{}.tsv", w.as_str()),
                    tsv(&["first_word", "fraction"], rows),
                );
                out.ok(
                    name,
                    "name_breakdown",
                    json!({"weighting": w.as_str(), "cutoff": opts.name_cutoff}),
                    json!({
                        "entries": b.entries.iter().map(|(k, v)| json!({"word": k, "fraction": v})).collect::<Vec<_>>(),
                        "other_fraction": b.other_fraction,
                        "excluded": b.excluded,
                    }),
                );
            }
            Err(e) => out.skip(name, &e),
        }
    }
}

fn clusters(trace: &Trace, opts: &AnalysisOptions, out: &mut Output) {
    let run = |out: &mut Output| -> Result<()> {
        let matrix = job_feature_vectors(trace)?;
        let n = matrix.len();
        let elbow_rows: Vec<Row> = if n > opts.elbow_sample_rows {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, n, opts.elbow_sample_rows).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| matrix.rows[i]).collect()
        } else {
            matrix.rows.clone()
        };
        let selection = match opts.cluster_k {
            Some(k) => {
                let model = best_of_restarts(&elbow_rows, k, opts.elbow.restarts, opts.seed)?;
                KSelection {
                    k,
                    residuals: vec![(k, model.residual_variance)],
                    model,
                }
            }
            None => select_k_rows(&elbow_rows, &opts.elbow, opts.seed)?,
        };
        let model = if elbow_rows.len() == n {
            selection.model.clone()
        } else {
            kmeans_from_centroids(&matrix.rows, selection.model.centroids.clone(), opts.seed)?
        };
        let summary = summarize_clusters(trace, &matrix, &model);
        let table = render_cluster_table(&summary);
        out.ok(
            "clusters",
            "job_feature_vectors+select_k+kmeans+summarize_clusters",
            json!({
                "features": FEATURE_NAMES,
                "transform": matrix.transform.description,
                "k_max": opts.elbow.k_max,
                "fixed_k": opts.cluster_k,
                "improvement_threshold": opts.elbow.improvement_threshold,
                "restarts": opts.elbow.restarts,
                "seed": opts.seed,
                "elbow_rows": elbow_rows.len(),
                "centers": "per-cluster medians in original units",
            }),
            json!({
                "k": selection.k,
                "rows": n,
                "excluded": matrix.excluded_count,
                "residual_variance_by_k": selection.residuals.iter().map(|(k, rv)| json!({"k": k, "residual_variance": rv})).collect::<Vec<_>>(),
                "residual_variance": model.residual_variance,
                "iterations": model.iterations,
                "transform_means": matrix.transform.means,
                "transform_stddevs": matrix.transform.stddevs,
                "clusters": to_value(&summary.clusters),
            }),
        );
        out.plot("table2_clusters.txt", table);
        Ok(())
    };
    if let Err(e) = run(out) {
        out.skip("clusters", &e);
    }
}

fn run_group(group: Group, trace: &Trace, opts: &AnalysisOptions) -> Output {
    let mut out = Output::default();
    match group {
        Group::DataSizes => data_sizes(trace, &mut out),
        Group::Access => access(trace, opts, &mut out),
        Group::Reaccess => reaccess(trace, &mut out),
        Group::TimeSeries => time_series(trace, opts, &mut out),
        Group::Burstiness => burstiness(trace, opts, &mut out),
        Group::Correlations => correlations(trace, opts, &mut out),
        Group::Periodogram => periodograms(trace, opts, &mut out),
        Group::Names => names(trace, opts, &mut out),
        Group::Clusters => clusters(trace, opts, &mut out),
    }
    out
}

fn decisions(opts: &AnalysisOptions) -> Value {
    json!({
        "seed": opts.seed,
        "bucket_width": opts.bucket_width,
        "span": "half-open [first submit, last submit + 1) unless given explicitly",
        "percentiles": "linear interpolation, rank p/100*(n-1)",
        "zipf_fit": "least squares of log10 count on log10 rank over all files, plus a fit over files with count >= trim_min_count",
        "file_size": "largest byte count observed for a path digest",
        "pre_existing_input": "input path seen earlier in the trace as an input or output",
        "occupancy": "task-seconds spread uniformly over [submit, submit + duration]",
        "clustering_transform": "log10(1+x) then z-score per dimension",
        "elbow": {"k_max": opts.elbow.k_max,
                "fixed_k": opts.cluster_k, "improvement_threshold": opts.elbow.improvement_threshold, "restarts": opts.elbow.restarts, "sample_rows": opts.elbow_sample_rows},
        "cluster_centers": "medians in original units",
        "first_word": "lowercased leading run of letters after skipping non-letters; <unnamed> when none",
        "name_cutoff": opts.name_cutoff,
        "plot_thinning": format!("CDF plots keep about {MAX_PLOT_POINTS} points; rank plots keep ranks up to 1000 then about 200 per decade"),
        "float_precision": "9 significant digits",
    })
}

fn trace_meta(trace: &Trace) -> Value {
    let v = validate(trace);
    let span = trace.span();
    json!({
        "label": trace.label(),
        "machine_count": trace.machine_count(),
        "records": trace.len(),
        "span_start": span.start,
        "span_end": span.end,
        "span_seconds": span.len(),
        "bytes_moved": trace.bytes_moved(),
        "missing_field_counts": v.missing_field_counts,
        "anomaly_count": v.anomalies.len(),
        "anomalies": v.anomalies.iter().take(100).map(to_value).collect::<Vec<_>>(),
    })
}

/// Runs the given section groups; `analyze` runs all of them.
pub fn analyze_groups(trace: &Trace, opts: &AnalysisOptions, groups: &[Group]) -> Analysis {
    let outputs: Vec<Output> = groups
        .par_iter()
        .map(|&g| run_group(g, trace, opts))
        .collect();
    let mut sections = Map::new();
    let mut skipped = Vec::new();
    let mut plots = Vec::new();
    for out in outputs {
        for (name, value) in out.sections {
            if let Some(reason) = value.get("reason") {
                skipped.push(json!({"section": name, "status": value["status"], "reason": reason}));
            }
            sections.insert(name, value);
        }
        plots.extend(out.plots);
    }
    plots.sort_by(|a, b| a.name.cmp(&b.name));
    let report = json!({
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
        "trace": trace_meta(trace),
        "sections": sections,
        "skipped": skipped,
        "decisions": decisions(opts),
    });
    Analysis { report, plots }
}

pub fn analyze(trace: &Trace, opts: &AnalysisOptions) -> Analysis {
    analyze_groups(trace, opts, &Group::ALL)
}

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Writes each plot file into `dir`, creating it if needed.
pub fn write_plots(dir: &Path, plots: &[PlotFile]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for p in plots {
        write_atomic(&dir.join(&p.name), p.contents.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_trace, GeneratorConfig};

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(0.123456789123), 0.123456789);
        assert_eq!(round_sig(123456789123.0), 123456789000.0);
        assert_eq!(round_sig(0.0), 0.0);
        let doc = render_json(&json!({"b": 1.0 / 3.0, "a": [2.0f64.sqrt()], "n": 7}));
        assert_eq!(
            doc,
            "{\n  \"a\": [\n    1.41421356\n  ],\n  \"b\": 0.333333333,\n  \"n\": 7\n}\n"
        );
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let pts: Vec<(f64, f64)> = (1..=100_000)
            .map(|i| (i as f64, i as f64 / 100_000.0))
            .collect();
        let thin = thin_cdf(&pts);
        assert!(thin.len() <= MAX_PLOT_POINTS + 2);
        assert_eq!(thin[0], pts[0]);
        assert_eq!(*thin.last().unwrap(), *pts.last().unwrap());
    }

    #[test]
    fn small_fixture_has_every_section() {
        let trace = generate_trace(&GeneratorConfig {
            jobs: 3_000,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let a = analyze(&trace, &AnalysisOptions::default());
        assert!(a.skipped().is_empty(), "{:?}", a.skipped());
        assert_eq!(a.section("clusters").unwrap()["status"], "ok");
        let b = analyze(&trace, &AnalysisOptions::default());
        assert_eq!(a.render(), b.render());
        assert_eq!(a.plots, b.plots);
    }
}
