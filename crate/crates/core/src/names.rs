//! Job-name breakdowns by first word.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Token for jobs without a usable name.
pub const UNNAMED: &str = "<unnamed>";

/// Default share below which a word is folded into "other".
pub const DEFAULT_CUTOFF: f64 = 0.01;

/// Lowercases `name`, skips leading non-letters and returns the leading run
/// of letters, e.g. `"123_etl-run"` gives `"etl"`.
pub fn first_word(name: &str) -> String {
    if name == UNNAMED {
        return UNNAMED.to_string();
    }
    let word: String = name
        .chars()
        .flat_map(char::to_lowercase)
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .collect();
    if word.is_empty() {
        UNNAMED.to_string()
    } else {
        word
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Jobs,
    IoBytes,
    TaskTime,
}

impl Weighting {
    pub const ALL: [Weighting; 3] = [Weighting::Jobs, Weighting::IoBytes, Weighting::TaskTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Jobs => "jobs",
            Weighting::IoBytes => "io_bytes",
            Weighting::TaskTime => "task_time",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jobs" => Ok(Weighting::Jobs),
            "io_bytes" | "io" | "bytes" => Ok(Weighting::IoBytes),
            "task_time" | "task-time" | "compute" => Ok(Weighting::TaskTime),
            other => Err(Error::InvalidArgument(format!(
                "unknown weighting `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NameBreakdown {
    pub weighting: Weighting,
    /// `(first word, share)` sorted by non-increasing share, ties by word.
    pub entries: Vec<(String, f64)>,
    pub other_fraction: f64,
    /// Jobs lacking the weight dimension.
    pub excluded: usize,
}

/// Share of jobs, I/O bytes or task-seconds per first word. Words under
/// `cutoff` are folded into `other_fraction`.
pub fn name_breakdown(trace: &Trace, weighting: Weighting, cutoff: f64) -> Result<NameBreakdown> {
    if !trace.records().iter().any(|r| r.name.is_some()) {
        return Err(Error::NoData("trace has no job names".into()));
    }
    let mut weights: HashMap<String, f64> = HashMap::new();
    let mut excluded = 0;
    for r in trace.records() {
        let w = match weighting {
            Weighting::Jobs => Some(1.0),
            Weighting::IoBytes => r.io_bytes().map(|b| b as f64),
            Weighting::TaskTime => r.task_seconds(),
        };
        let Some(w) = w else {
            excluded += 1;
            continue;
        };
        let token = r
            .name
            .as_deref()
            .map(first_word)
            .unwrap_or_else(|| UNNAMED.to_string());
        *weights.entry(token).or_default() += w;
    }
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(Error::NoData(format!(
            "total {} weight is zero",
            weighting.as_str()
        )));
    }

    let mut shares: Vec<(String, f64)> = weights.into_iter().map(|(k, w)| (k, w / total)).collect();
    shares.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let split = shares.partition_point(|s| s.1 >= cutoff);
    let other_fraction = shares[split..].iter().map(|s| s.1).sum();
    shares.truncate(split);
    Ok(NameBreakdown {
        weighting,
        entries: shares,
        other_fraction,
        excluded,
    })
}
