//! Scaled-down synthetic workloads built directly from a trace.
//!
//! The trace itself is the model: jobs are grouped into fixed time windows
//! and a synthetic workload either replays them with scaled sizes or draws
//! whole jobs with replacement from each window. Drawing whole jobs keeps
//! the six dimensions of a job together, so cross-dimension correlations in
//! the source carry over.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::HOUR;
use crate::trace::{write_jsonl, JobRecord, Span, Trace};

pub const DEFAULT_WINDOW_WIDTH: u64 = HOUR;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// Seconds from the trace span start.
    pub start_offset: u64,
    pub width: u64,
    /// Trace indices of the complete jobs submitted in this window.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct WorkloadModel<'a> {
    pub trace: &'a Trace,
    pub source_label: String,
    pub source_machine_count: u32,
    pub window_width: u64,
    /// Half-open windows partitioning the trace span.
    pub windows: Vec<Window>,
    /// Jobs left out because a dimension was missing.
    pub excluded: usize,
}

impl WorkloadModel<'_> {
    pub fn span_seconds(&self) -> u64 {
        self.trace.span().len()
    }

    pub fn job_count(&self) -> usize {
        self.windows.iter().map(|w| w.members.len()).sum()
    }
}

pub fn build_workload_model(trace: &Trace, window_width: u64) -> Result<WorkloadModel<'_>> {
    if window_width == 0 {
        return Err(Error::InvalidBucketWidth);
    }
    let span = trace.span();
    let n_windows = span.len().div_ceil(window_width) as usize;
    let mut windows: Vec<Window> = (0..n_windows)
        .map(|i| {
            let start_offset = i as u64 * window_width;
            Window {
                start_offset,
                width: window_width.min(span.len() - start_offset),
                members: Vec::new(),
            }
        })
        .collect();
    let mut excluded = 0;
    for (i, r) in trace.records().iter().enumerate() {
        if r.features().is_none() {
            excluded += 1;
            continue;
        }
        let offset = (r.submit_time - span.start) as u64;
        windows[(offset / window_width) as usize].members.push(i);
    }
    if excluded == trace.len() {
        return Err(Error::NoCompleteJobs);
    }
    Ok(WorkloadModel {
        trace,
        source_label: trace.label().to_string(),
        source_machine_count: trace.machine_count(),
        window_width,
        windows,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ReplayScaled,
    Sampled,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ReplayScaled => "replay_scaled",
            Mode::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replay_scaled" | "replay" => Ok(Mode::ReplayScaled),
            "sampled" => Ok(Mode::Sampled),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthesis mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticJob {
    /// Seconds from the start of the synthetic workload.
    pub submit_offset: u64,
    pub input_bytes: u64,
    pub shuffle_bytes: u64,
    pub output_bytes: u64,
    pub map_tasks: Option<u64>,
    pub reduce_tasks: Option<u64>,
    pub map_task_seconds: f64,
    pub reduce_task_seconds: f64,
    /// Wall-clock duration, carried over unscaled.
    pub duration: f64,
    pub source_job_id: u64,
    pub name: Option<String>,
    pub input_path_hash: Option<u64>,
    pub output_path_hash: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWorkload {
    pub jobs: Vec<SyntheticJob>,
    pub target_machine_count: u32,
    pub scale_factor: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Absolute time of offset 0 (the source span start).
    pub origin: i64,
    pub span_seconds: u64,
}

impl SyntheticWorkload {
    /// The trace itself as a workload: complete jobs, unscaled. Also returns
    /// how many jobs were left out for missing a dimension.
    pub fn from_trace(trace: &Trace) -> Result<(SyntheticWorkload, usize)> {
        let model = build_workload_model(trace, DEFAULT_WINDOW_WIDTH)?;
        let workload = synthesize(
            &model,
            trace.machine_count(),
            model.span_seconds(),
            Mode::ReplayScaled,
            0,
        )?;
        Ok((workload, model.excluded))
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Job records in the canonical trace schema. Replayed jobs keep their
    /// source ids; sampled jobs are numbered in submit order, since a source
    /// job may be drawn more than once.
    pub fn to_records(&self) -> Vec<JobRecord> {
        self.jobs
            .iter()
            .enumerate()
            .map(|(i, j)| JobRecord {
                job_id: match self.mode {
                    Mode::ReplayScaled => j.source_job_id,
                    Mode::Sampled => i as u64,
                },
                name: j.name.clone(),
                submit_time: self.origin + j.submit_offset as i64,
                duration: Some(j.duration),
                input_bytes: Some(j.input_bytes),
                shuffle_bytes: Some(j.shuffle_bytes),
                output_bytes: Some(j.output_bytes),
                map_task_seconds: Some(j.map_task_seconds),
                reduce_task_seconds: Some(j.reduce_task_seconds),
                map_tasks: j.map_tasks,
                reduce_tasks: j.reduce_tasks,
                input_path_hash: j.input_path_hash,
                output_path_hash: j.output_path_hash,
            })
            .collect()
    }

    pub fn to_trace(&self, label: impl Into<String>) -> Result<Trace> {
        let trace = Trace::new(label, self.target_machine_count, self.to_records())?;
        let span = Span {
            start: self.origin,
            end: self.origin + self.span_seconds as i64,
        };
        trace.with_span(span)
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> Result<()> {
        write_jsonl(out, &self.to_records())
    }
}

fn scale_bytes(b: u64, s: f64) -> u64 {
    if s == 1.0 {
        b
    } else {
        (b as f64 * s).round() as u64
    }
}

/// Zero stays zero so map-only jobs stay map-only; anything else is at least 1.
fn scale_tasks(n: Option<u64>, s: f64) -> Option<u64> {
    n.map(|n| {
        if n == 0 || s == 1.0 {
            n
        } else {
            ((n as f64 * s).round() as u64).max(1)
        }
    })
}

fn scaled_job(r: &JobRecord, submit_offset: u64, s: f64) -> SyntheticJob {
    SyntheticJob {
        submit_offset,
        input_bytes: scale_bytes(r.input_bytes.unwrap_or(0), s),
        shuffle_bytes: scale_bytes(r.shuffle_bytes.unwrap_or(0), s),
        output_bytes: scale_bytes(r.output_bytes.unwrap_or(0), s),
        map_tasks: scale_tasks(r.map_tasks, s),
        reduce_tasks: scale_tasks(r.reduce_tasks, s),
        map_task_seconds: r.map_task_seconds.unwrap_or(0.0) * s,
        reduce_task_seconds: r.reduce_task_seconds.unwrap_or(0.0) * s,
        duration: r.duration.unwrap_or(0.0),
        source_job_id: r.job_id,
        name: r.name.clone(),
        input_path_hash: r.input_path_hash,
        output_path_hash: r.output_path_hash,
    }
}

fn window_rng(seed: u64, window: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window as u64);
    rng
}

/// `floor(x)` plus one with probability `frac(x)`.
fn stochastic_round(x: f64, rng: &mut ChaCha8Rng) -> usize {
    let base = x.floor();
    let extra = rng.random::<f64>() < x - base;
    base as usize + extra as usize
}

/// Synthesizes a workload for `target_machine_count` machines over
/// `target_span` seconds. Sizes and task metrics scale by
/// `target_machine_count / source_machine_count`.
///
/// In sampled mode target window `i` draws from source window
/// `i mod n_windows`, so shorter targets take a prefix of the source and
/// longer ones wrap around. The draw count is the source count times the
/// width ratio of the two windows, which is 1 except for a partial last
/// window.
pub fn synthesize(
    model: &WorkloadModel<'_>,
    target_machine_count: u32,
    target_span: u64,
    mode: Mode,
    seed: u64,
) -> Result<SyntheticWorkload> {
    if target_machine_count == 0 {
        return Err(Error::InvalidArgument(
            "target machine count must be positive".into(),
        ));
    }
    if target_span == 0 {
        return Err(Error::InvalidArgument(
            "target span must be positive".into(),
        ));
    }
    let source_span = model.span_seconds();
    let s = target_machine_count as f64 / model.source_machine_count as f64;
    let records = model.trace.records();
    let origin = model.trace.span().start;

    let mut jobs = Vec::new();
    match mode {
        Mode::ReplayScaled => {
            if target_span > source_span {
                return Err(Error::SpanTooLong {
                    target: target_span,
                    source_span,
                });
            }
            for w in &model.windows {
                for &i in &w.members {
                    let offset = (records[i].submit_time - origin) as u64;
                    if offset < target_span {
                        jobs.push(scaled_job(&records[i], offset, s));
                    }
                }
            }
        }
        Mode::Sampled => {
            let width = model.window_width;
            let n_target = target_span.div_ceil(width) as usize;
            for t in 0..n_target {
                let start = t as u64 * width;
                let target_width = width.min(target_span - start);
                let source = &model.windows[t % model.windows.len()];
                if source.members.is_empty() {
                    continue;
                }
                let mut rng = window_rng(seed, t);
                let expected =
                    source.members.len() as f64 * target_width as f64 / source.width as f64;
                let count = stochastic_round(expected, &mut rng);
                let mut drawn: Vec<SyntheticJob> = (0..count)
                    .map(|_| {
                        let pick = source.members[rng.random_range(0..source.members.len())];
                        let offset = start + rng.random_range(0..target_width);
                        scaled_job(&records[pick], offset, s)
                    })
                    .collect();
                drawn.sort_by_key(|j| j.submit_offset);
                jobs.extend(drawn);
            }
        }
    }
    Ok(SyntheticWorkload {
        jobs,
        target_machine_count,
        scale_factor: s,
        seed,
        mode,
        origin,
        span_seconds: target_span,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPlan {
    /// `(file_id, size_bytes)` per distinct source input.
    pub files: Vec<(String, u64)>,
    pub total_bytes: u64,
    pub notes: Vec<String>,
}

impl DataPlan {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "file_id\tsize_bytes")?;
        for (id, size) in &self.files {
            writeln!(out, "{id}\t{size}")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One synthetic input file per distinct source job with non-zero input,
/// sized to that job's scaled input bytes.
pub fn data_prepopulation_plan(workload: &SyntheticWorkload) -> Result<DataPlan> {
    if workload.is_empty() {
        return Err(Error::NoData("synthetic workload has no jobs".into()));
    }
    let mut sizes: BTreeMap<u64, u64> = BTreeMap::new();
    for j in &workload.jobs {
        if j.input_bytes > 0 {
            let e = sizes.entry(j.source_job_id).or_default();
            *e = (*e).max(j.input_bytes);
        }
    }
    let files: Vec<(String, u64)> = sizes
        .into_iter()
        .map(|(id, size)| (format!("input-{id}"), size))
        .collect();
    let total_bytes = files.iter().map(|f| f.1).sum();
    Ok(DataPlan {
        files,
        total_bytes,
        notes: vec![
            "input files are independent per source job; shared-file access skew is not reproduced"
                .into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: u64, t: i64, input: u64) -> JobRecord {
        JobRecord {
            duration: Some(10.0),
            input_bytes: Some(input),
            shuffle_bytes: Some(input / 2),
            output_bytes: Some(input / 4),
            map_task_seconds: Some(20.0),
            reduce_task_seconds: Some(0.0),
            map_tasks: Some(10),
            reduce_tasks: Some(0),
            ..JobRecord::new(id, t)
        }
    }

    #[test]
    fn two_hour_trace_two_windows() {
        let trace = Trace::new(
            "t",
            10,
            vec![
                job(1, 0, 5),
                job(2, 3599, 5),
                job(3, 3600, 5),
                job(4, 7199, 5),
            ],
        )
        .unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        assert_eq!(model.windows.len(), 2);
        assert_eq!(model.windows[0].members, vec![0, 1]);
        assert_eq!(model.windows[1].members, vec![2, 3]);
        assert_eq!(model.windows[1].start_offset, 3600);
    }

    #[test]
    fn incomplete_jobs_excluded() {
        let mut partial = job(2, 5, 5);
        partial.shuffle_bytes = None;
        let trace = Trace::new("t", 1, vec![job(1, 0, 5), partial.clone()]).unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        assert_eq!(model.excluded, 1);
        assert_eq!(model.job_count(), 1);
        let only_partial = Trace::new("t", 1, vec![partial]).unwrap();
        assert!(matches!(
            build_workload_model(&only_partial, 3600),
            Err(Error::NoCompleteJobs)
        ));
    }

    #[test]
    fn six_hundred_to_sixty() {
        let trace = Trace::new("t", 600, vec![job(1, 0, 1_000_000), job(2, 10, 3_000)]).unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        let w = synthesize(&model, 60, 11, Mode::ReplayScaled, 0).unwrap();
        assert_eq!(w.scale_factor, 0.1);
        assert_eq!(w.jobs[0].input_bytes, 100_000);
        assert_eq!(w.jobs[0].shuffle_bytes, 50_000);
        assert_eq!(w.jobs[1].input_bytes, 300);
        assert_eq!(w.jobs[0].map_tasks, Some(1));
        assert_eq!(w.jobs[0].reduce_tasks, Some(0));
        assert!((w.jobs[0].map_task_seconds - 2.0).abs() < 1e-12);
    }

    #[test]
    fn replay_identity_and_truncation() {
        let records = vec![job(7, 100, 1), job(3, 200, 2), job(9, 300, 3)];
        let trace = Trace::new("t", 4, records.clone()).unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        let w = synthesize(&model, 4, model.span_seconds(), Mode::ReplayScaled, 1).unwrap();
        assert_eq!(w.to_records(), records);
        let short = synthesize(&model, 4, 150, Mode::ReplayScaled, 1).unwrap();
        assert_eq!(short.len(), 2);
        assert!(matches!(
            synthesize(&model, 4, 202, Mode::ReplayScaled, 1),
            Err(Error::SpanTooLong {
                target: 202,
                source_span: 201
            })
        ));
    }

    #[test]
    fn sampled_same_span_keeps_counts() {
        let records: Vec<JobRecord> = (0..50).map(|i| job(i, (i as i64) * 300, 10 + i)).collect();
        let trace = Trace::new("t", 1, records).unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        let w = synthesize(&model, 1, model.span_seconds(), Mode::Sampled, 5).unwrap();
        assert_eq!(w.len(), 50);
        let again = synthesize(&model, 1, model.span_seconds(), Mode::Sampled, 5).unwrap();
        assert_eq!(w, again);
        for pair in w.jobs.windows(2) {
            assert!(pair[0].submit_offset <= pair[1].submit_offset);
        }
        // whole jobs are drawn: the source tuple is intact
        for j in &w.jobs {
            assert_eq!(j.input_bytes, 10 + j.source_job_id);
            assert_eq!(j.shuffle_bytes, (10 + j.source_job_id) / 2);
        }
    }

    #[test]
    fn data_plan() {
        let trace = Trace::new(
            "t",
            1,
            vec![job(1, 0, 1 << 20), job(2, 1, 2 << 20), job(3, 2, 2 << 20)],
        )
        .unwrap();
        let model = build_workload_model(&trace, 3600).unwrap();
        let w = synthesize(&model, 1, model.span_seconds(), Mode::ReplayScaled, 0).unwrap();
        let plan = data_prepopulation_plan(&w).unwrap();
        assert_eq!(plan.files.len(), 3);
        assert_eq!(plan.total_bytes, 5 << 20);
        let empty = SyntheticWorkload { jobs: vec![], ..w };
        assert!(data_prepopulation_plan(&empty).is_err());
    }
}
