//! Small statistics shared by the analyses: empirical CDFs, interpolated
//! percentiles and Pearson correlation.

use serde::{Deserialize, Serialize};

/// Step CDF. Each point is `(value, fraction of mass at or below value)`,
/// values strictly increasing and the last fraction exactly 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub points: Vec<(f64, f64)>,
    pub sample_count: usize,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in samples.iter().enumerate() {
            let frac = (i + 1) as f64 / n as f64;
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => points.push((v, frac)),
            }
        }
        if let Some(last) = points.last_mut() {
            last.1 = 1.0;
        }
        EmpiricalCdf {
            points,
            sample_count: n,
        }
    }

    /// CDF of `value` weighted by `weight`. `sample_count` is the number of
    /// pairs. Returns an empty CDF when the total weight is zero.
    pub fn from_weighted(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let sample_count = pairs.len();
        if total <= 0.0 {
            return EmpiricalCdf {
                points: Vec::new(),
                sample_count,
            };
        }
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut acc = 0.0;
        for (v, w) in pairs {
            acc += w;
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 = acc / total,
                _ => points.push((v, acc / total)),
            }
        }
        if let Some(last) = points.last_mut() {
            last.1 = 1.0;
        }
        EmpiricalCdf {
            points,
            sample_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fraction of mass at or below `value`.
    pub fn fraction_at(&self, value: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.0 <= value);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }

    /// Smallest value whose cumulative fraction reaches `q`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let idx = self.points.partition_point(|p| p.1 < q);
        self.points
            .get(idx.min(self.points.len().saturating_sub(1)))
            .map(|p| p.0)
    }
}

/// Percentile of sorted data by linear interpolation between order
/// statistics: rank `p/100 * (n-1)`, so p0 is the minimum and p100 the maximum.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p.clamp(0.0, 100.0) / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    })
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile_sorted(&sorted(values), 50.0)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pearson correlation, or `None` when either input has zero variance.
/// Two-pass centered sums; the result is clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs equal-length inputs");
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
