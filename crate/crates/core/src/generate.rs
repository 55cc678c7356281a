//! Seeded generator of realistic-looking traces for tests, benchmarks and
//! demos: diurnal arrivals, Zipf-popular input files, a mixture of job
//! types, and first-word job names.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Zipf};

use crate::error::{Error, Result};
use crate::temporal::DAY;
use crate::trace::{hash_path, JobRecord, Trace};

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub jobs: usize,
    pub span_seconds: u64,
    pub machine_count: u32,
    /// Absolute time of the first second of the span.
    pub start: i64,
    /// Relative amplitude of the daily arrival cycle, in [0, 1).
    pub diurnal_amplitude: f64,
    pub input_files: usize,
    pub zipf_exponent: f64,
    /// Probability that a job overwrites a shared file instead of a fresh one.
    pub shared_output_probability: f64,
    pub with_names: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            jobs: 10_000,
            span_seconds: 7 * DAY,
            machine_count: 600,
            start: 1_230_768_000,
            diurnal_amplitude: 0.6,
            input_files: 5_000,
            zipf_exponent: 1.0,
            shared_output_probability: 0.2,
            with_names: true,
            seed: 42,
        }
    }
}

struct JobType {
    weight: f64,
    shuffle_ratio: f64,
    output_ratio: f64,
    /// Median map task-seconds per input GB.
    map_seconds_per_gb: f64,
    reduce_seconds_per_gb: f64,
    median_duration: f64,
}

const JOB_TYPES: [JobType; 4] = [
    // small interactive jobs
    JobType {
        weight: 0.80,
        shuffle_ratio: 0.0,
        output_ratio: 0.5,
        map_seconds_per_gb: 800.0,
        reduce_seconds_per_gb: 0.0,
        median_duration: 40.0,
    },
    // load / transform
    JobType {
        weight: 0.10,
        shuffle_ratio: 0.0,
        output_ratio: 1.0,
        map_seconds_per_gb: 1500.0,
        reduce_seconds_per_gb: 0.0,
        median_duration: 600.0,
    },
    // aggregate
    JobType {
        weight: 0.07,
        shuffle_ratio: 0.3,
        output_ratio: 0.05,
        map_seconds_per_gb: 1200.0,
        reduce_seconds_per_gb: 900.0,
        median_duration: 1200.0,
    },
    // expand and aggregate
    JobType {
        weight: 0.03,
        shuffle_ratio: 1.5,
        output_ratio: 0.2,
        map_seconds_per_gb: 2000.0,
        reduce_seconds_per_gb: 2500.0,
        median_duration: 3600.0,
    },
];

const NAME_WORDS: [&str; 12] = [
    "insert", "select", "ad", "etl", "piglatin", "oozie", "from", "hourly", "daily", "report",
    "index", "query",
];

const GB: f64 = (1u64 << 30) as f64;

fn lognormal(median: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(median.max(1e-9).ln(), sigma).expect("valid lognormal")
}

fn pick_type(rng: &mut ChaCha8Rng) -> &'static JobType {
    let mut u = rng.random::<f64>();
    for t in &JOB_TYPES {
        if u < t.weight {
            return t;
        }
        u -= t.weight;
    }
    &JOB_TYPES[0]
}

/// Submit offsets with density proportional to `1 + a sin(2πt/day)`, by
/// rejection sampling, sorted.
fn arrivals(rng: &mut ChaCha8Rng, n: usize, span: u64, amplitude: f64) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = rng.random_range(0..span);
        let phase = 2.0 * std::f64::consts::PI * t as f64 / DAY as f64;
        if rng.random::<f64>() * (1.0 + amplitude) < 1.0 + amplitude * phase.sin() {
            out.push(t);
        }
    }
    out.sort_unstable();
    out
}

pub fn generate_records(config: &GeneratorConfig) -> Result<Vec<JobRecord>> {
    if config.jobs == 0 || config.span_seconds == 0 || config.input_files == 0 {
        return Err(Error::InvalidArgument(
            "jobs, span and input files must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&config.diurnal_amplitude) {
        return Err(Error::InvalidArgument(
            "diurnal amplitude must be in [0, 1)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let file_size = lognormal(50e6, 2.5);
    let sizes: Vec<u64> = (0..config.input_files)
        .map(|_| file_size.sample(&mut rng).round() as u64)
        .collect();
    let file_hashes: Vec<u64> = (0..config.input_files)
        .map(|i| hash_path(&format!("/warehouse/in/{i}")))
        .collect::<Result<_>>()?;
    let popularity = Zipf::new(config.input_files as f64, config.zipf_exponent)
        .map_err(|e| Error::InvalidArgument(format!("zipf: {e}")))?;
    let name_pick = Zipf::new(NAME_WORDS.len() as f64, 1.2).expect("valid zipf");
    let noise = lognormal(1.0, 0.5);
    let duration_noise = lognormal(1.0, 0.8);

    let offsets = arrivals(
        &mut rng,
        config.jobs,
        config.span_seconds,
        config.diurnal_amplitude,
    );
    let mut records = Vec::with_capacity(config.jobs);
    for (i, offset) in offsets.into_iter().enumerate() {
        let ty = pick_type(&mut rng);
        let file = popularity.sample(&mut rng) as usize - 1;
        let input = sizes[file];
        let gb = input as f64 / GB;
        let shuffle = (input as f64 * ty.shuffle_ratio * noise.sample(&mut rng)).round() as u64;
        let output = (input as f64 * ty.output_ratio * noise.sample(&mut rng)).round() as u64;
        let map_seconds = (gb * ty.map_seconds_per_gb * noise.sample(&mut rng)).max(1.0);
        let reduce_seconds = gb * ty.reduce_seconds_per_gb * noise.sample(&mut rng);
        let map_tasks = (input.div_ceil(128 << 20)).max(1);
        let reduce_tasks = if shuffle > 0 {
            shuffle.div_ceil(1 << 30).max(1)
        } else {
            0
        };
        let duration = (ty.median_duration * duration_noise.sample(&mut rng))
            .round()
            .max(1.0);
        let output_path = if rng.random::<f64>() < config.shared_output_probability {
            format!("/warehouse/in/{}", popularity.sample(&mut rng) as usize - 1)
        } else {
            format!("/warehouse/out/{i}")
        };
        let name = config.with_names.then(|| {
            let word = NAME_WORDS[name_pick.sample(&mut rng) as usize - 1];
            format!("{word}_{}", rng.random_range(0..1000))
        });
        records.push(JobRecord {
            job_id: i as u64,
            name,
            submit_time: config.start + offset as i64,
            duration: Some(duration),
            input_bytes: Some(input),
            shuffle_bytes: Some(shuffle),
            output_bytes: Some(output),
            map_task_seconds: Some(map_seconds),
            reduce_task_seconds: Some(reduce_seconds),
            map_tasks: Some(map_tasks),
            reduce_tasks: Some(reduce_tasks),
            input_path_hash: Some(file_hashes[file]),
            output_path_hash: Some(hash_path(&output_path)?),
        });
    }
    Ok(records)
}

/// A generated trace whose span is exactly `span_seconds` from `start`.
pub fn generate_trace(config: &GeneratorConfig) -> Result<Trace> {
    let span = crate::trace::Span {
        start: config.start,
        end: config.start + config.span_seconds as i64,
    };
    Trace::new("generated", config.machine_count, generate_records(config)?)?.with_span(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate;

    #[test]
    fn deterministic_and_valid() {
        let config = GeneratorConfig {
            jobs: 2_000,
            ..GeneratorConfig::default()
        };
        let a = generate_trace(&config).unwrap();
        let b = generate_trace(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2_000);
        assert_eq!(a.span().len(), config.span_seconds);
        let report = validate(&a);
        assert!(report.anomalies.is_empty(), "{:?}", report.anomalies);
        assert!(a.records().iter().all(|r| r.features().is_some()));
    }

    #[test]
    fn arrivals_follow_the_daily_cycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = arrivals(&mut rng, 20_000, DAY, 0.9);
        // the sine peaks in the first half-day
        let first_half = t.iter().filter(|&&x| x < DAY / 2).count();
        assert!(first_half > 13_000, "{first_half}");
    }
}
