//! Characterization, synthesis and replay of MapReduce workloads from
//! per-job trace summaries.
//!
//! The analyses are pure functions over an immutable [`Trace`]:
//!
//! - [`access`]: per-job data sizes, file popularity, 80-x rule, re-access locality
//! - [`temporal`]: hourly series, burstiness, correlations, diurnal detection
//! - [`names`] and [`cluster`]: job-name breakdowns and k-means job types
//! - [`synthesis`]: scaled-down synthetic workloads from the trace itself
//! - [`replay`] and [`cache`]: slot-cluster and file-cache simulators
//! - [`report`]: the end-to-end report and figure-shaped plot data

pub mod access;
pub mod cache;
pub mod cluster;
pub mod error;
pub mod generate;
pub mod names;
pub mod replay;
pub mod report;
pub mod stats;
pub mod synthesis;
pub mod temporal;
pub mod trace;

pub use error::{Error, Result};
pub use stats::EmpiricalCdf;
pub use temporal::{Dimension, TimeSeries};
pub use trace::{
    hash_path, parse_trace, validate, Format, JobRecord, ParseOptions, Side, SizeDimension, Span,
    Trace,
};
