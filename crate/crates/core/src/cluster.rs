//! Job typing by k-means over six per-job dimensions.
//!
//! Features are `log10(1 + x)` then z-scored per dimension, because raw
//! byte counts and task-seconds span many orders of magnitude. k-means uses
//! k-means++ seeding from a ChaCha stream and Lloyd iterations, so a model is
//! a pure function of `(rows, k, seed)`. The number of types is picked by the
//! elbow rule over best-of-restarts residual variance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::median;
use crate::trace::Trace;

pub type Row = [f64; 6];

pub const FEATURE_NAMES: [&str; 6] = [
    "input_bytes",
    "shuffle_bytes",
    "output_bytes",
    "duration",
    "map_task_seconds",
    "reduce_task_seconds",
];

pub const MAX_ITERATIONS: usize = 100;
pub const DEFAULT_IMPROVEMENT_THRESHOLD: f64 = 0.10;
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_K_MAX: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub description: String,
    pub means: Row,
    /// Population standard deviations of the log features; 1 where a
    /// dimension is constant.
    pub stddevs: Row,
}

impl FeatureTransform {
    pub fn apply(&self, raw: &Row) -> Row {
        std::array::from_fn(|d| ((1.0 + raw[d]).log10() - self.means[d]) / self.stddevs[d])
    }

    pub fn invert(&self, z: &Row) -> Row {
        std::array::from_fn(|d| 10f64.powf(z[d] * self.stddevs[d] + self.means[d]) - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobFeatureMatrix {
    pub rows: Vec<Row>,
    /// Trace index of the job behind each row.
    pub job_indices: Vec<usize>,
    pub transform: FeatureTransform,
    pub excluded_count: usize,
}

impl JobFeatureMatrix {
    /// Transforms raw feature rows; `job_indices` defaults to `0..n`.
    pub fn from_raw(raw: &[Row], excluded_count: usize) -> Result<Self> {
        let n = raw.len();
        if n == 0 {
            return Err(Error::NoData("no job has all six dimensions".into()));
        }
        let logs: Vec<Row> = raw
            .iter()
            .map(|r| std::array::from_fn(|d| (1.0 + r[d]).log10()))
            .collect();
        let mut means = [0.0; 6];
        let mut stddevs = [0.0; 6];
        for d in 0..6 {
            let m = logs.iter().map(|r| r[d]).sum::<f64>() / n as f64;
            let var = logs.iter().map(|r| (r[d] - m) * (r[d] - m)).sum::<f64>() / n as f64;
            means[d] = m;
            stddevs[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        let rows = logs
            .iter()
            .map(|r| std::array::from_fn(|d| (r[d] - means[d]) / stddevs[d]))
            .collect();
        Ok(JobFeatureMatrix {
            rows,
            job_indices: (0..n).collect(),
            transform: FeatureTransform {
                description: "log10(1+x) then z-score (population stddev)".into(),
                means,
                stddevs,
            },
            excluded_count,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Feature rows for every job with all six dimensions present.
pub fn job_feature_vectors(trace: &Trace) -> Result<JobFeatureMatrix> {
    let mut raw = Vec::with_capacity(trace.len());
    let mut indices = Vec::with_capacity(trace.len());
    for (i, r) in trace.records().iter().enumerate() {
        if let Some(f) = r.features() {
            raw.push(f);
            indices.push(i);
        }
    }
    let excluded = trace.len() - raw.len();
    let mut matrix = JobFeatureMatrix::from_raw(&raw, excluded)?;
    matrix.job_indices = indices;
    Ok(matrix)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Row>,
    /// Cluster id per matrix row.
    pub assignments: Vec<usize>,
    /// Mean squared distance from each row to its centroid.
    pub residual_variance: f64,
    pub seed: u64,
    pub iterations: usize,
}

#[inline]
fn dist2(a: &Row, b: &Row) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest id on ties.
#[inline]
fn nearest(row: &Row, centroids: &[Row]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all(rows: &[Row], centroids: &[Row]) -> (Vec<usize>, Vec<f64>) {
    rows.par_iter()
        .with_min_len(4096)
        .map(|r| nearest(r, centroids))
        .unzip()
}

fn plus_plus_init(rows: &[Row], k: usize, rng: &mut ChaCha8Rng) -> Vec<Row> {
    let n = rows.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = rows.iter().map(|r| dist2(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = rows[pick];
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(dist2(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Moves centroids to member means; empty clusters take the rows farthest
/// from their current centroids.
fn update_centroids(rows: &[Row], assign: &[usize], dists: &[f64], centroids: &mut [Row]) {
    let k = centroids.len();
    let mut sums = vec![[0.0; 6]; k];
    let mut counts = vec![0usize; k];
    for (r, &a) in rows.iter().zip(assign) {
        counts[a] += 1;
        for d in 0..6 {
            sums[a][d] += r[d];
        }
    }
    let mut farthest: Vec<usize> = Vec::new();
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = std::array::from_fn(|d| sums[j][d] / counts[j] as f64);
        } else {
            if farthest.is_empty() {
                farthest = (0..rows.len()).collect();
                farthest.sort_by(|&a, &b| dists[b].total_cmp(&dists[a]).then(a.cmp(&b)));
                farthest.reverse();
            }
            if let Some(i) = farthest.pop() {
                centroids[j] = rows[i];
            }
        }
    }
}

pub fn kmeans(matrix: &JobFeatureMatrix, k: usize, seed: u64) -> Result<ClusterModel> {
    kmeans_rows(&matrix.rows, k, seed)
}

pub fn kmeans_rows(rows: &[Row], k: usize, seed: u64) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > rows.len() {
        return Err(Error::KTooLarge {
            k,
            rows: rows.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centroids = plus_plus_init(rows, k, &mut rng);
    Ok(lloyd(rows, centroids, seed))
}

/// Lloyd iterations on all of `rows` starting from `centroids`, e.g. the
/// centroids of a model fitted on a subsample.
pub fn kmeans_from_centroids(rows: &[Row], centroids: Vec<Row>, seed: u64) -> Result<ClusterModel> {
    if centroids.is_empty() {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if centroids.len() > rows.len() {
        return Err(Error::KTooLarge {
            k: centroids.len(),
            rows: rows.len(),
        });
    }
    Ok(lloyd(rows, centroids, seed))
}

fn lloyd(rows: &[Row], mut centroids: Vec<Row>, seed: u64) -> ClusterModel {
    let k = centroids.len();
    let (mut assign, mut dists) = assign_all(rows, &centroids);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        update_centroids(rows, &assign, &dists, &mut centroids);
        let (next, next_dists) = assign_all(rows, &centroids);
        let changed = next != assign;
        assign = next;
        dists = next_dists;
        if !changed {
            break;
        }
    }
    let residual_variance = dists.iter().sum::<f64>() / rows.len() as f64;
    ClusterModel {
        k,
        centroids,
        assignments: assign,
        residual_variance,
        seed,
        iterations,
    }
}

/// Seed for restart `restart` at cluster count `k`.
pub fn restart_seed(seed: u64, k: usize, restart: usize) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = seed ^ ((k as u64) << 32 | restart as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Lowest-residual model over `restarts` seeded runs; earlier restart wins ties.
pub fn best_of_restarts(
    rows: &[Row],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusterModel> {
    let mut best: Option<ClusterModel> = None;
    for r in 0..restarts.max(1) {
        let model = kmeans_rows(rows, k, restart_seed(seed, k, r))?;
        if best
            .as_ref()
            .is_none_or(|b| model.residual_variance < b.residual_variance)
        {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowConfig {
    pub k_max: usize,
    pub improvement_threshold: f64,
    pub restarts: usize,
}

impl Default for ElbowConfig {
    fn default() -> Self {
        ElbowConfig {
            k_max: DEFAULT_K_MAX,
            improvement_threshold: DEFAULT_IMPROVEMENT_THRESHOLD,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// Best residual variance for every k evaluated.
    pub residuals: Vec<(usize, f64)>,
    pub model: ClusterModel,
}

/// Elbow rule: the smallest k for which going to k+1 improves residual
/// variance by less than `improvement_threshold` (relative); `k_max` if
/// that never happens.
pub fn select_k(
    matrix: &JobFeatureMatrix,
    k_max: usize,
    improvement_threshold: f64,
    seed: u64,
) -> Result<usize> {
    let config = ElbowConfig {
        k_max,
        improvement_threshold,
        ..ElbowConfig::default()
    };
    Ok(select_k_rows(&matrix.rows, &config, seed)?.k)
}

pub fn select_k_rows(rows: &[Row], config: &ElbowConfig, seed: u64) -> Result<KSelection> {
    if config.k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let k_max = config.k_max.min(rows.len()).max(1);
    let mut residuals = Vec::new();
    let mut current = best_of_restarts(rows, 1, config.restarts, seed)?;
    residuals.push((1, current.residual_variance));
    for k in 1..k_max {
        let rv = current.residual_variance;
        if rv <= 0.0 {
            return Ok(KSelection {
                k,
                residuals,
                model: current,
            });
        }
        let next = best_of_restarts(rows, k + 1, config.restarts, seed)?;
        residuals.push((k + 1, next.residual_variance));
        if (rv - next.residual_variance) / rv < config.improvement_threshold {
            return Ok(KSelection {
                k,
                residuals,
                model: current,
            });
        }
        current = next;
    }
    Ok(KSelection {
        k: k_max,
        residuals,
        model: current,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub id: usize,
    pub job_count: usize,
    /// Per-dimension medians in original units, in [`FEATURE_NAMES`] order.
    pub medians: Row,
    /// Analyst-assigned label; empty until someone fills it in.
    pub label: String,
    /// Machine suggestion from the dominant standardized centroid dimensions.
    pub suggested_label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub clusters: Vec<ClusterInfo>,
}

/// Per-cluster job counts and medians, largest cluster first.
pub fn summarize_clusters(
    trace: &Trace,
    matrix: &JobFeatureMatrix,
    model: &ClusterModel,
) -> ClusterSummary {
    let mut members: Vec<Vec<Row>> = vec![Vec::new(); model.k];
    for (row, &c) in model.assignments.iter().enumerate() {
        let job = &trace.records()[matrix.job_indices[row]];
        members[c].push(job.features().expect("clustered jobs have all features"));
    }
    let mut clusters: Vec<ClusterInfo> = members
        .iter()
        .enumerate()
        .map(|(id, rows)| {
            let medians = std::array::from_fn(|d| {
                let col: Vec<f64> = rows.iter().map(|r| r[d]).collect();
                median(&col).unwrap_or(0.0)
            });
            ClusterInfo {
                id,
                job_count: rows.len(),
                medians,
                label: String::new(),
                suggested_label: suggest_label(&model.centroids[id]),
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.job_count.cmp(&a.job_count).then(a.id.cmp(&b.id)));
    ClusterSummary { clusters }
}

fn suggest_label(centroid: &Row) -> String {
    const WORDS: [(&str, &str, &str); 6] = [
        ("input", "large", "small"),
        ("shuffle", "large", "small"),
        ("output", "large", "small"),
        ("duration", "long", "short"),
        ("map time", "heavy", "light"),
        ("reduce time", "heavy", "light"),
    ];
    let mut dims: Vec<usize> = (0..6).collect();
    dims.sort_by(|&a, &b| {
        centroid[b]
            .abs()
            .total_cmp(&centroid[a].abs())
            .then(a.cmp(&b))
    });
    if centroid[dims[0]].abs() < 0.5 {
        return "typical".into();
    }
    let word = |d: usize| {
        let (name, hi, lo) = WORDS[d];
        format!("{} {name}", if centroid[d] > 0.0 { hi } else { lo })
    };
    if centroid[dims[1]].abs() >= 0.5 * centroid[dims[0]].abs() {
        format!("{}, {}", word(dims[0]), word(dims[1]))
    } else {
        word(dims[0])
    }
}

pub fn format_bytes(bytes: f64) -> String {
    const UNITS: [&str; 6] = ["B", "KB", "MB", "GB", "TB", "PB"];
    if bytes < 0.5 {
        return "0".into();
    }
    let mut v = bytes;
    let mut unit = 0;
    while v >= 1023.5 && unit < UNITS.len() - 1 {
        v /= 1024.0;
        unit += 1;
    }
    if v < 9.95 && unit > 0 {
        format!("{v:.1} {}", UNITS[unit])
    } else {
        format!("{:.0} {}", v, UNITS[unit])
    }
}

pub fn format_duration(seconds: f64) -> String {
    let s = seconds.round() as u64;
    if s < 60 {
        return format!("{s} s");
    }
    let minutes = (seconds / 60.0).round() as u64;
    if minutes < 60 {
        return format!("{minutes} min");
    }
    let (h, m) = (minutes / 60, minutes % 60);
    if h >= 48 {
        return format!("{} days", (seconds / 86_400.0).round() as u64);
    }
    let hours = if h == 1 {
        "hr".to_string()
    } else {
        "hrs".to_string()
    };
    if m == 0 {
        format!("{h} {hours}")
    } else {
        format!("{h} {hours} {m} min")
    }
}

fn format_count(v: f64) -> String {
    let digits = format!("{}", v.round() as u64);
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Aligned text table in the layout of a job-type summary: count, the six
/// medians, and the label (suggestions marked with `~`).
pub fn render_cluster_table(summary: &ClusterSummary) -> String {
    let header = [
        "# Jobs",
        "Input",
        "Shuffle",
        "Output",
        "Duration",
        "Map time",
        "Reduce time",
        "Label",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for c in &summary.clusters {
        let m = &c.medians;
        let label = if c.label.is_empty() {
            format!("~{}", c.suggested_label)
        } else {
            c.label.clone()
        };
        rows.push(vec![
            c.job_count.to_string(),
            format_bytes(m[0]),
            format_bytes(m[1]),
            format_bytes(m[2]),
            format_duration(m[3]),
            format_count(m[4]),
            format_count(m[5]),
            label,
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                if i + 1 == row.len() {
                    cell.clone()
                } else {
                    format!("{cell:>w$}", w = widths[i])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
