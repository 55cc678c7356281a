//! Workload variation over time: bucketed series, burstiness, correlations
//! between dimensions and diurnal detection.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{pearson, percentile_sorted, sorted};
use crate::trace::Trace;

pub const HOUR: u64 = 3600;
pub const DAY: u64 = 24 * HOUR;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    JobsSubmitted,
    DataSizeBytes,
    ComputeTimeTaskSeconds,
    OccupancySlots,
    /// Artificial comparison series.
    Reference,
}

impl Dimension {
    pub const TRACE: [Dimension; 4] = [
        Dimension::JobsSubmitted,
        Dimension::DataSizeBytes,
        Dimension::ComputeTimeTaskSeconds,
        Dimension::OccupancySlots,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::JobsSubmitted => "jobs_submitted",
            Dimension::DataSizeBytes => "data_size_bytes",
            Dimension::ComputeTimeTaskSeconds => "compute_time_task_seconds",
            Dimension::OccupancySlots => "occupancy_slots",
            Dimension::Reference => "reference",
        }
    }
}

impl std::str::FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "jobs" | "jobs_submitted" => Dimension::JobsSubmitted,
            "data" | "data_size" | "data_size_bytes" => Dimension::DataSizeBytes,
            "compute" | "compute_time" | "task_time" | "compute_time_task_seconds" => {
                Dimension::ComputeTimeTaskSeconds
            }
            "occupancy" | "occupancy_slots" => Dimension::OccupancySlots,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown dimension `{other}`"
                )))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dimension: Dimension,
    pub bucket_width: u64,
    /// Start of bucket 0, seconds.
    pub start: i64,
    pub values: Vec<f64>,
    /// Jobs left out because a component of the dimension was missing.
    pub excluded: usize,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn bucket_count(span_len: u64, width: u64) -> usize {
    span_len.div_ceil(width).max(1) as usize
}

/// Per-bucket totals of jobs, aggregate I/O bytes or task-seconds, each job
/// attributed wholly to the bucket of its submit time. Occupancy is
/// delegated to [`occupancy_series`].
pub fn bucket_time_series(
    trace: &Trace,
    dimension: Dimension,
    bucket_width: u64,
) -> Result<TimeSeries> {
    if bucket_width == 0 {
        return Err(Error::InvalidBucketWidth);
    }
    match dimension {
        Dimension::OccupancySlots => return occupancy_series(trace, bucket_width),
        Dimension::Reference => {
            return Err(Error::InvalidArgument(
                "reference series are not derived from traces".into(),
            ))
        }
        _ => {}
    }
    let span = trace.span();
    let mut values = vec![0.0; bucket_count(span.len(), bucket_width)];
    let mut excluded = 0;
    for r in trace.records() {
        let amount = match dimension {
            Dimension::DataSizeBytes => r.io_bytes().map(|b| b as f64),
            Dimension::ComputeTimeTaskSeconds => r.task_seconds(),
            _ => Some(1.0),
        };
        match amount {
            Some(a) => {
                let idx = ((r.submit_time - span.start) as u64 / bucket_width) as usize;
                values[idx] += a;
            }
            None => excluded += 1,
        }
    }
    if excluded == trace.len() {
        return Err(Error::NoData(format!(
            "no job has every component of {}",
            dimension.as_str()
        )));
    }
    Ok(TimeSeries {
        dimension,
        bucket_width,
        start: span.start,
        values,
        excluded,
    })
}

/// Average active slots per bucket, spreading each job's task-seconds
/// uniformly over `[submit, submit + duration]`. Zero-duration jobs land in
/// their submit bucket. The series extends past the trace span to cover the
/// last running job.
pub fn occupancy_series(trace: &Trace, bucket_width: u64) -> Result<TimeSeries> {
    if bucket_width == 0 {
        return Err(Error::InvalidBucketWidth);
    }
    let span = trace.span();
    let width = bucket_width as f64;
    let jobs: Vec<(f64, f64, f64)> = trace
        .records()
        .iter()
        .filter_map(|r| {
            Some((
                (r.submit_time - span.start) as f64,
                r.duration?,
                r.task_seconds()?,
            ))
        })
        .collect();
    if jobs.is_empty() {
        return Err(Error::NoData("no job has duration and task-seconds".into()));
    }
    let horizon = jobs
        .iter()
        .map(|&(s, d, _)| s + d)
        .fold(span.len() as f64, f64::max);
    let n = ((horizon / width).ceil() as usize).max(bucket_count(span.len(), bucket_width));
    let mut acc = vec![0.0; n];
    for &(s, d, ts) in &jobs {
        let first = (s / width).floor() as usize;
        if d == 0.0 {
            acc[first] += ts;
            continue;
        }
        let end = s + d;
        let last = (((end / width).ceil() as usize).max(first + 1)).min(n);
        for (b, slot) in acc.iter_mut().enumerate().take(last).skip(first) {
            let lo = (b as f64 * width).max(s);
            let hi = ((b + 1) as f64 * width).min(end);
            if hi > lo {
                *slot += ts * (hi - lo) / d;
            }
        }
    }
    Ok(TimeSeries {
        dimension: Dimension::OccupancySlots,
        bucket_width,
        start: span.start,
        values: acc.into_iter().map(|v| v / width).collect(),
        excluded: trace.len() - jobs.len(),
    })
}

/// Runs of at least `min_run` consecutive empty buckets, as `(first, length)`.
/// Long runs in a busy cluster usually mean logging gaps, not idleness.
pub fn zero_runs(series: &TimeSeries, min_run: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in series
        .values
        .iter()
        .chain(std::iter::once(&1.0))
        .enumerate()
    {
        match (v == 0.0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_run {
                    runs.push((s, i - s));
                }
                start = None;
            }
            _ => {}
        }
    }
    runs
}

/// n-th percentile over median for each percentile in the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurstinessCurve {
    /// `(ratio, percentile)` pairs in grid order.
    pub points: Vec<(f64, u32)>,
    pub median: f64,
}

impl BurstinessCurve {
    pub fn ratio_at(&self, percentile: u32) -> Option<f64> {
        self.points.iter().find(|p| p.1 == percentile).map(|p| p.0)
    }
}

pub fn default_percentile_grid() -> Vec<u32> {
    (1..=100).collect()
}

pub fn burstiness_curve(series: &TimeSeries, percentile_grid: &[u32]) -> Result<BurstinessCurve> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            len: series.len(),
            min: 2,
        });
    }
    if let Some(p) = percentile_grid.iter().find(|&&p| p > 100) {
        return Err(Error::InvalidArgument(format!(
            "percentile {p} is above 100"
        )));
    }
    let values = sorted(&series.values);
    let median = percentile_sorted(&values, 50.0).expect("non-empty");
    if median <= 0.0 {
        return Err(Error::MedianZero);
    }
    let mut grid = percentile_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let points = grid
        .into_iter()
        .map(|p| {
            (
                percentile_sorted(&values, p as f64).expect("non-empty") / median,
                p,
            )
        })
        .collect();
    Ok(BurstinessCurve { points, median })
}

pub fn peak_to_median(series: &TimeSeries, percentile: u32) -> Result<f64> {
    Ok(burstiness_curve(series, &[percentile])?.points[0].0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineKind {
    /// `sin(2πt/24) + 2`: min-max range equals the mean.
    RangeEqualsMean,
    /// `sin(2πt/24) + 20`: range is a tenth of the mean.
    RangeEqualsTenthOfMean,
}

impl SineKind {
    pub fn offset(self) -> f64 {
        match self {
            SineKind::RangeEqualsMean => 2.0,
            SineKind::RangeEqualsTenthOfMean => 20.0,
        }
    }
}

/// Hourly samples of a 24-hour sine with the given offset.
pub fn sine_reference(kind: SineKind, buckets: usize) -> Result<TimeSeries> {
    if buckets < 24 {
        return Err(Error::TooShort {
            len: buckets,
            min: 24,
        });
    }
    let values = (0..buckets)
        .map(|t| (2.0 * PI * t as f64 / 24.0).sin() + kind.offset())
        .collect();
    Ok(TimeSeries {
        dimension: Dimension::Reference,
        bucket_width: HOUR,
        start: 0,
        values,
        excluded: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub r_jobs_data: f64,
    pub r_jobs_compute: f64,
    pub r_data_compute: f64,
    pub n_buckets: usize,
}

/// Pearson correlations between the three submit-attributed series on a
/// shared bucket grid.
pub fn dimension_correlations(trace: &Trace, bucket_width: u64) -> Result<CorrelationMatrix> {
    let jobs = bucket_time_series(trace, Dimension::JobsSubmitted, bucket_width)?;
    let data = bucket_time_series(trace, Dimension::DataSizeBytes, bucket_width)?;
    let compute = bucket_time_series(trace, Dimension::ComputeTimeTaskSeconds, bucket_width)?;
    correlate_series(&jobs.values, &data.values, &compute.values)
}

pub fn correlate_series(jobs: &[f64], data: &[f64], compute: &[f64]) -> Result<CorrelationMatrix> {
    if jobs.len() != data.len() || jobs.len() != compute.len() {
        return Err(Error::InvalidArgument(
            "series are not on one bucket grid".into(),
        ));
    }
    for (name, s) in [
        ("jobs_submitted", jobs),
        ("data_size_bytes", data),
        ("compute_time_task_seconds", compute),
    ] {
        if s.iter().all(|&v| v == s[0]) {
            return Err(Error::ZeroVariance(name.into()));
        }
    }
    let r = |x: &[f64], y: &[f64], what: &str| {
        pearson(x, y).ok_or_else(|| Error::ZeroVariance(what.into()))
    };
    Ok(CorrelationMatrix {
        r_jobs_data: r(jobs, data, "jobs/data")?,
        r_jobs_compute: r(jobs, compute, "jobs/compute")?,
        r_data_compute: r(data, compute, "data/compute")?,
        n_buckets: jobs.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralComponent {
    pub period_seconds: f64,
    pub power_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub components: Vec<SpectralComponent>,
    pub diurnal: bool,
}

pub const MIN_PERIODOGRAM_BUCKETS: usize = 48;
pub const DIURNAL_POWER_FRACTION: f64 = 0.05;

/// One-sided power spectrum of the mean-removed series. Returns the
/// `top_k` strongest non-DC components and whether a component within one
/// bucket of a 24-hour period carries at least 5% of the non-DC power.
pub fn periodogram(series: &TimeSeries, top_k: usize) -> Result<Periodogram> {
    let n = series.len();
    if n < MIN_PERIODOGRAM_BUCKETS {
        return Err(Error::TooShort {
            len: n,
            min: MIN_PERIODOGRAM_BUCKETS,
        });
    }
    let mean = series.total() / n as f64;
    let energy: f64 = series.values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let scale: f64 = series.values.iter().map(|v| v * v).sum();
    if energy <= 1e-24 * scale || energy == 0.0 {
        return Ok(Periodogram {
            components: Vec::new(),
            diurnal: false,
        });
    }

    let mut buf: Vec<Complex<f64>> = series
        .values
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let mut power: Vec<(usize, f64)> = (1..=n / 2)
        .map(|k| {
            let p = buf[k].norm_sqr();
            (k, if 2 * k == n { p } else { 2.0 * p })
        })
        .collect();
    let total: f64 = power.iter().map(|p| p.1).sum();
    let width = series.bucket_width as f64;
    let period = |k: usize| n as f64 * width / k as f64;

    let diurnal = power.iter().any(|&(k, p)| {
        (period(k) - DAY as f64).abs() <= width && p / total >= DIURNAL_POWER_FRACTION
    });
    power.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let components = power
        .into_iter()
        .take(top_k)
        .map(|(k, p)| SpectralComponent {
            period_seconds: period(k),
            power_fraction: p / total,
        })
        .collect();
    Ok(Periodogram {
        components,
        diurnal,
    })
}
