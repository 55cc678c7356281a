//! Data access patterns: per-job size distributions, file popularity and its
//! Zipf fit, access-vs-size curves, the 80-x rule, and re-access locality.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::EmpiricalCdf;
use crate::trace::{Side, SizeDimension, Trace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    pub dimension: SizeDimension,
    pub cdf: EmpiricalCdf,
    /// Records lacking the dimension.
    pub excluded: usize,
}

/// CDF of per-job byte counts for one dimension.
pub fn data_size_cdf(trace: &Trace, dimension: SizeDimension) -> Result<SizeDistribution> {
    let samples: Vec<f64> = trace
        .records()
        .iter()
        .filter_map(|r| r.bytes(dimension))
        .map(|b| b as f64)
        .collect();
    if samples.is_empty() {
        return Err(Error::NoData(format!(
            "no job has {}_bytes",
            dimension.as_str()
        )));
    }
    let excluded = trace.len() - samples.len();
    Ok(SizeDistribution {
        dimension,
        cdf: EmpiricalCdf::from_samples(samples),
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEntry {
    pub digest: u64,
    pub access_count: u64,
    /// Largest byte count observed for the file, if any job reported one.
    pub size: Option<u64>,
}

/// Files ordered by non-increasing access count, ties by ascending digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedAccessTable {
    pub side: Side,
    pub entries: Vec<AccessEntry>,
}

impl RankedAccessTable {
    pub fn from_entries(side: Side, mut entries: Vec<AccessEntry>) -> Self {
        entries.sort_by(|a, b| {
            b.access_count
                .cmp(&a.access_count)
                .then(a.digest.cmp(&b.digest))
        });
        RankedAccessTable { side, entries }
    }

    pub fn total_accesses(&self) -> u64 {
        self.entries.iter().map(|e| e.access_count).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counts one access per job on `side`.
pub fn access_frequency_rank(trace: &Trace, side: Side) -> Result<RankedAccessTable> {
    let mut files: HashMap<u64, AccessEntry> = HashMap::new();
    for r in trace.records() {
        let Some(digest) = r.path_hash(side) else {
            continue;
        };
        let entry = files.entry(digest).or_insert(AccessEntry {
            digest,
            access_count: 0,
            size: None,
        });
        entry.access_count += 1;
        if let Some(b) = r.side_bytes(side) {
            entry.size = Some(entry.size.map_or(b, |s| s.max(b)));
        }
    }
    if files.is_empty() {
        return Err(Error::NoData(format!("no {} path hashes", side.as_str())));
    }
    Ok(RankedAccessTable::from_entries(
        side,
        files.into_values().collect(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZipfFit {
    /// Magnitude of the log-log slope.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares line through `(log10 rank, log10 count)` over every entry.
pub fn fit_zipf(table: &RankedAccessTable) -> Result<ZipfFit> {
    fit_points(
        table
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| ((i + 1) as f64, e.access_count as f64)),
    )
}

/// Same fit restricted to entries with at least `min_count` accesses; ranks
/// are kept from the full table.
pub fn fit_zipf_trimmed(table: &RankedAccessTable, min_count: u64) -> Result<ZipfFit> {
    fit_points(
        table
            .entries
            .iter()
            .enumerate()
            .take_while(|(_, e)| e.access_count >= min_count)
            .map(|(i, e)| ((i + 1) as f64, e.access_count as f64)),
    )
}

fn fit_points(points: impl Iterator<Item = (f64, f64)>) -> Result<ZipfFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.map(|(r, c)| (r.log10(), c.log10())).unzip();
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "zipf fit needs 2 ranked files, have {n}"
        )));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A flat line fits flat data exactly.
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(ZipfFit {
        slope: slope.abs(),
        intercept,
        r_squared,
        n_points: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessSizeCurves {
    pub side: Side,
    /// Fraction of jobs whose file is at most a given size.
    pub jobs_cdf: EmpiricalCdf,
    /// Fraction of stored bytes (distinct files) in files at most a given size.
    pub bytes_cdf: EmpiricalCdf,
    pub files: usize,
    /// Jobs whose file never reported a size.
    pub excluded_jobs: u64,
}

fn sized_entries(trace: &Trace, side: Side) -> Result<(Vec<AccessEntry>, u64)> {
    let table = access_frequency_rank(trace, side)?;
    let (sized, unsized_): (Vec<AccessEntry>, Vec<AccessEntry>) =
        table.entries.into_iter().partition(|e| e.size.is_some());
    if sized.is_empty() {
        return Err(Error::NoData(format!(
            "no {} files with known sizes",
            side.as_str()
        )));
    }
    Ok((sized, unsized_.iter().map(|e| e.access_count).sum()))
}

pub fn access_vs_size_curves(trace: &Trace, side: Side) -> Result<AccessSizeCurves> {
    let (files, excluded_jobs) = sized_entries(trace, side)?;
    let jobs_cdf = EmpiricalCdf::from_weighted(
        files
            .iter()
            .map(|e| (e.size.unwrap() as f64, e.access_count as f64))
            .collect(),
    );
    let bytes_cdf = EmpiricalCdf::from_weighted(
        files
            .iter()
            .map(|e| {
                let s = e.size.unwrap() as f64;
                (s, s)
            })
            .collect(),
    );
    if bytes_cdf.is_empty() {
        return Err(Error::NoData(format!(
            "all {} files are empty",
            side.as_str()
        )));
    }
    Ok(AccessSizeCurves {
        side,
        jobs_cdf,
        bytes_cdf,
        files: files.len(),
        excluded_jobs,
    })
}

/// Percentage of stored bytes held by the most popular files that together
/// absorb at least `access_quantile` of all accesses.
pub fn eighty_x_rule(trace: &Trace, side: Side, access_quantile: f64) -> Result<f64> {
    let (files, _) = sized_entries(trace, side)?;
    eighty_x_from_entries(
        &RankedAccessTable::from_entries(side, files).entries,
        access_quantile,
    )
}

/// 80-x computation over entries already in rank order with known sizes.
pub fn eighty_x_from_entries(entries: &[AccessEntry], access_quantile: f64) -> Result<f64> {
    if !(access_quantile > 0.0 && access_quantile <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "access quantile must be in (0, 1], got {access_quantile}"
        )));
    }
    let total_accesses: u64 = entries.iter().map(|e| e.access_count).sum();
    let total_bytes: u64 = entries.iter().map(|e| e.size.unwrap_or(0)).sum();
    if total_bytes == 0 {
        return Err(Error::NoData("no stored bytes".into()));
    }
    let needed = access_quantile * total_accesses as f64;
    let mut covered = 0u64;
    let mut bytes = 0u64;
    for e in entries {
        if covered as f64 >= needed {
            break;
        }
        covered += e.access_count;
        bytes += e.size.unwrap_or(0);
    }
    Ok(100.0 * bytes as f64 / total_bytes as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReaccessStats {
    /// Gaps ending at an input read, from the previous touch of the same path.
    pub interval_cdf: EmpiricalCdf,
    /// Subset of gaps whose previous touch was an input read.
    pub input_reread_cdf: EmpiricalCdf,
    /// Subset of gaps whose previous touch was an output write.
    pub output_reuse_cdf: EmpiricalCdf,
    /// Fraction of jobs with an input path that was already seen earlier in
    /// the trace as an input or an output.
    pub reaccess_job_fraction: f64,
    pub jobs_with_input: usize,
}

pub fn reaccess_intervals(trace: &Trace) -> Result<ReaccessStats> {
    #[derive(Clone, Copy)]
    enum Touch {
        Read,
        Write,
    }
    let mut last: HashMap<u64, (i64, Touch)> = HashMap::new();
    let mut all = Vec::new();
    let mut reread = Vec::new();
    let mut reuse = Vec::new();
    let mut jobs_with_input = 0usize;
    let mut preexisting = 0usize;

    for r in trace.records() {
        let t = r.submit_time;
        if let Some(h) = r.input_path_hash {
            jobs_with_input += 1;
            if let Some(&(t0, kind)) = last.get(&h) {
                preexisting += 1;
                let gap = (t - t0) as f64;
                all.push(gap);
                match kind {
                    Touch::Read => reread.push(gap),
                    Touch::Write => reuse.push(gap),
                }
            }
            last.insert(h, (t, Touch::Read));
        }
        if let Some(h) = r.output_path_hash {
            last.insert(h, (t, Touch::Write));
        }
    }
    if jobs_with_input == 0 {
        return Err(Error::NoData("no input path hashes".into()));
    }
    Ok(ReaccessStats {
        interval_cdf: EmpiricalCdf::from_samples(all),
        input_reread_cdf: EmpiricalCdf::from_samples(reread),
        output_reuse_cdf: EmpiricalCdf::from_samples(reuse),
        reaccess_job_fraction: preexisting as f64 / jobs_with_input as f64,
        jobs_with_input,
    })
}
