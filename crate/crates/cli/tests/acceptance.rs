//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrtrace::access::{eighty_x_rule, fit_zipf, AccessEntry, RankedAccessTable};
use mrtrace::cache::{simulate_cache, AccessEvent, AccessKind, Admission, CacheConfig, Eviction};
use mrtrace::cluster::{kmeans, select_k, JobFeatureMatrix, Row};
use mrtrace::generate::{generate_records, generate_trace, GeneratorConfig};
use mrtrace::replay::{simulate, Scheduler, SimConfig};
use mrtrace::report::{analyze, AnalysisOptions};
use mrtrace::stats::pearson;
use mrtrace::synthesis::{build_workload_model, synthesize, Mode, SyntheticJob, SyntheticWorkload};
use mrtrace::temporal::{
    burstiness_curve, correlate_series, default_percentile_grid, dimension_correlations,
    sine_reference, Dimension, SineKind, TimeSeries, HOUR,
};
use mrtrace::trace::write_jsonl;
use mrtrace::{parse_trace, validate, Format, JobRecord, ParseOptions, Side, Trace};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- 1

fn zipf_recovery() -> Outcome {
    let mut notes = Vec::new();
    for alpha in [0.5, 5.0 / 6.0, 1.2] {
        let entries: Vec<AccessEntry> = (1..=10_000u64)
            .map(|r| AccessEntry {
                digest: r,
                access_count: (1e9 * (r as f64).powf(-alpha)).round() as u64,
                size: None,
            })
            .collect();
        let start = Instant::now();
        let fit = fit_zipf(&RankedAccessTable::from_entries(Side::Input, entries))
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        check(
            (fit.slope - alpha).abs() <= 0.01,
            format!("alpha {alpha:.4}: fitted {:.6}", fit.slope),
        )?;
        check(
            fit.r_squared >= 0.999,
            format!("alpha {alpha:.4}: r2 {}", fit.r_squared),
        )?;
        check(
            elapsed < Duration::from_secs(1),
            format!("alpha {alpha:.4}: took {elapsed:?}"),
        )?;
        notes.push(format!("{alpha:.3}->{:.6}", fit.slope));
    }
    Ok(notes.join(" "))
}

// ---------------------------------------------------------------- 2

fn burstiness_references() -> Outcome {
    let constant = TimeSeries {
        dimension: Dimension::Reference,
        bucket_width: HOUR,
        start: 0,
        values: vec![17.0; 168],
        excluded: 0,
    };
    let grid: Vec<u32> = std::iter::once(0)
        .chain(default_percentile_grid())
        .collect();
    let c = burstiness_curve(&constant, &grid).map_err(|e| e.to_string())?;
    for &(ratio, p) in &c.points {
        check(
            (ratio - 1.0).abs() <= 1e-9,
            format!("constant series p{p} ratio {ratio}"),
        )?;
    }
    let sine = sine_reference(SineKind::RangeEqualsMean, 7 * 24).map_err(|e| e.to_string())?;
    let c = burstiness_curve(&sine, &[0, 100]).map_err(|e| e.to_string())?;
    let (p0, p100) = (c.ratio_at(0).unwrap(), c.ratio_at(100).unwrap());
    check((p100 - 1.5).abs() <= 0.01, format!("sine p100 {p100}"))?;
    check((p0 - 0.5).abs() <= 0.01, format!("sine p0 {p0}"))?;
    Ok(format!("sine p0={p0:.6} p100={p100:.6}"))
}

// ---------------------------------------------------------------- 3

/// Single-pass sums formula, unrelated to the library's two-pass code.
fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn correlations() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(3..200);
        let mut series =
            || -> Vec<f64> { (0..n).map(|_| r.random_range(0..1000) as f64).collect() };
        let (j, d, c) = (series(), series(), series());
        let Ok(m) = correlate_series(&j, &d, &c) else {
            continue;
        };
        for (got, x, y) in [
            (m.r_jobs_data, &j, &d),
            (m.r_jobs_compute, &j, &c),
            (m.r_data_compute, &d, &c),
        ] {
            let want = oracle_pearson(x, y);
            worst = worst.max((got - want).abs());
        }
    }
    check(worst <= 1e-9, format!("max deviation {worst:e}"))?;

    // via a trace: hourly buckets with data and compute proportional to jobs
    let mut records = Vec::new();
    let mut id = 0;
    for hour in 0..48i64 {
        for _ in 0..(1 + hour % 5) {
            records.push(JobRecord {
                input_bytes: Some(100),
                shuffle_bytes: Some(0),
                output_bytes: Some(0),
                map_task_seconds: Some(7.0),
                reduce_task_seconds: Some(0.0),
                ..JobRecord::new(id, hour * 3600)
            });
            id += 1;
        }
    }
    let trace = Trace::new("linear", 1, records).map_err(|e| e.to_string())?;
    let m = dimension_correlations(&trace, HOUR).map_err(|e| e.to_string())?;
    check(
        m.r_jobs_data == 1.0 && m.r_jobs_compute == 1.0 && m.r_data_compute == 1.0,
        format!("linear pair: {m:?}"),
    )?;
    let x: Vec<f64> = (0..100).map(|i| (i * i % 17) as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 5.0).collect();
    check(
        pearson(&x, &y) == Some(1.0),
        format!("pearson(x, 3x+5) = {:?}", pearson(&x, &y)),
    )?;
    Ok(format!("max deviation {worst:.2e}"))
}

// ---------------------------------------------------------------- 4

fn planted_clusters() -> Outcome {
    let mut r = rng(4);
    let centers = [
        [1.0, 2.0, 1.5, 1.0, 2.0, 0.5],
        [4.0, 5.5, 4.0, 3.0, 4.5, 3.5],
        [7.0, 3.0, 7.0, 5.0, 7.0, 6.5],
    ];
    let sigma = 0.1;
    let mut raw = Vec::new();
    let mut truth = Vec::new();
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..1000 {
            let row: Row = std::array::from_fn(|d| {
                // Box-Muller on log10 scale, then back to raw units
                let (u1, u2): (f64, f64) = (r.random::<f64>().max(1e-300), r.random());
                let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                10f64.powf(c[d] + sigma * z) - 1.0
            });
            raw.push(row);
            truth.push(label);
        }
    }
    let matrix = JobFeatureMatrix::from_raw(&raw, 0).map_err(|e| e.to_string())?;

    // precondition: centers at least 8 within-cluster stddevs apart after the transform
    let mut min_sep = f64::INFINITY;
    let stats: Vec<(Row, f64)> = (0..3)
        .map(|k| {
            let rows: Vec<&Row> = matrix
                .rows
                .iter()
                .zip(&truth)
                .filter(|(_, &t)| t == k)
                .map(|(r, _)| r)
                .collect();
            let n = rows.len() as f64;
            let mean: Row = std::array::from_fn(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n);
            let sd = (0..6)
                .map(|d| (rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt())
                .fold(0.0, f64::max);
            (mean, sd)
        })
        .collect();
    for a in 0..3 {
        for b in a + 1..3 {
            let dist = (0..6)
                .map(|d| (stats[a].0[d] - stats[b].0[d]).powi(2))
                .sum::<f64>()
                .sqrt();
            min_sep = min_sep.min(dist / stats[a].1.max(stats[b].1));
        }
    }
    check(
        min_sep >= 8.0,
        format!("fixture separation only {min_sep:.1} stddevs"),
    )?;

    let seed = 42;
    let k = select_k(&matrix, 10, 0.10, seed).map_err(|e| e.to_string())?;
    check(k == 3, format!("select_k returned {k}"))?;
    let model = kmeans(&matrix, 3, seed).map_err(|e| e.to_string())?;
    for _ in 0..3 {
        check(
            select_k(&matrix, 10, 0.10, seed).map_err(|e| e.to_string())? == 3
                && kmeans(&matrix, 3, seed).map_err(|e| e.to_string())? == model,
            "rerun differs",
        )?;
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let best = perms
        .iter()
        .map(|p| {
            model
                .assignments
                .iter()
                .zip(&truth)
                .filter(|(&a, &t)| p[a] == t)
                .count()
        })
        .max()
        .unwrap();
    let agreement = best as f64 / truth.len() as f64;
    check(agreement >= 0.99, format!("agreement {agreement}"))?;
    Ok(format!(
        "k=3 agreement={agreement:.4} separation={min_sep:.1}"
    ))
}

// ---------------------------------------------------------------- 5

/// Smallest set of top-ranked files (count desc, digest asc) reaching the
/// quantile, found by trying every subset.
fn oracle_eighty_x(counts: &[u64], sizes: &[u64], digests: &[u64], q: f64) -> f64 {
    let n = counts.len();
    let total: u64 = counts.iter().sum();
    let stored: u64 = sizes.iter().sum();
    let ranks_above = |i: usize, j: usize| {
        counts[j] > counts[i] || (counts[j] == counts[i] && digests[j] < digests[i])
    };
    let mut best: Option<(u32, u64)> = None;
    for mask in 0u32..(1 << n) {
        let members = |i: usize| mask & (1 << i) != 0;
        let closed =
            (0..n).all(|i| !members(i) || (0..n).all(|j| !ranks_above(i, j) || members(j)));
        let covered: u64 = (0..n).filter(|&i| members(i)).map(|i| counts[i]).sum();
        if closed && covered as f64 >= q * total as f64 {
            let bytes = (0..n).filter(|&i| members(i)).map(|i| sizes[i]).sum();
            if best.is_none_or(|(c, _)| mask.count_ones() < c) {
                best = Some((mask.count_ones(), bytes));
            }
        }
    }
    100.0 * best.expect("full set always covers").1 as f64 / stored as f64
}

fn count_vectors(files: usize, max_total: u64) -> Vec<Vec<u64>> {
    if files == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=max_total.saturating_sub(files as u64 - 1) {
        for mut rest in count_vectors(files - 1, max_total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn eighty_x_exhaustive() -> Outcome {
    let size_choices = [1u64, 3, 10];
    let quantiles = [0.5, 0.8, 1.0];
    let mut cases = 0u64;
    for files in 1..=5usize {
        for counts in count_vectors(files, 10) {
            for size_code in 0..size_choices.len().pow(files as u32) {
                let sizes: Vec<u64> = (0..files)
                    .map(|i| size_choices[size_code / size_choices.len().pow(i as u32) % 3])
                    .collect();
                // reversed digests so ties break against insertion order
                let digests: Vec<u64> = (0..files as u64).map(|i| 100 - i).collect();
                let mut records = Vec::new();
                for i in 0..files {
                    for _ in 0..counts[i] {
                        let id = records.len() as u64;
                        records.push(JobRecord {
                            input_bytes: Some(sizes[i]),
                            input_path_hash: Some(digests[i]),
                            ..JobRecord::new(id, id as i64)
                        });
                    }
                }
                let trace = Trace::new("x", 1, records).map_err(|e| e.to_string())?;
                for q in quantiles {
                    let got = eighty_x_rule(&trace, Side::Input, q).map_err(|e| e.to_string())?;
                    let want = oracle_eighty_x(&counts, &sizes, &digests, q);
                    check(
                        got == want,
                        format!("counts {counts:?} sizes {sizes:?} q {q}: {got} vs {want}"),
                    )?;
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases"))
}

// ---------------------------------------------------------------- 6

fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn jsonl(records: &[JobRecord]) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn parse(bytes: &[u8], machines: u32) -> Result<Trace, String> {
    parse_trace(
        bytes,
        Format::Jsonl,
        &ParseOptions {
            label: "fixture".into(),
            machine_count: machines,
        },
    )
    .map_err(|e| e.to_string())
}

fn synthesis_fidelity() -> Outcome {
    let machines = 600;
    let source_bytes =
        jsonl(&generate_records(&GeneratorConfig::default()).map_err(|e| e.to_string())?)?;
    let source = parse(&source_bytes, machines)?;
    let model = build_workload_model(&source, HOUR).map_err(|e| e.to_string())?;
    let span = model.span_seconds();
    let synth = synthesize(&model, machines, span, Mode::Sampled, 42).map_err(|e| e.to_string())?;
    let synth_trace = synth.to_trace("synthetic").map_err(|e| e.to_string())?;

    let features =
        |t: &Trace| -> Vec<[f64; 6]> { t.records().iter().filter_map(|r| r.features()).collect() };
    let (fs, ft) = (features(&source), features(&synth_trace));
    let mut worst: f64 = 0.0;
    for d in 0..6 {
        let a: Vec<f64> = fs.iter().map(|r| r[d]).collect();
        let b: Vec<f64> = ft.iter().map(|r| r[d]).collect();
        let ks = ks_statistic(&a, &b);
        check(ks <= 0.05, format!("dimension {d}: KS {ks}"))?;
        worst = worst.max(ks);
    }
    let r_source = dimension_correlations(&source, HOUR)
        .map_err(|e| e.to_string())?
        .r_data_compute;
    let r_synth = dimension_correlations(&synth_trace, HOUR)
        .map_err(|e| e.to_string())?
        .r_data_compute;
    check(
        (r_source - r_synth).abs() <= 0.1,
        format!("data/compute correlation {r_synth:.4} vs source {r_source:.4}"),
    )?;

    let replay =
        synthesize(&model, machines, span, Mode::ReplayScaled, 42).map_err(|e| e.to_string())?;
    let mut replay_bytes = Vec::new();
    replay
        .write_jsonl(&mut replay_bytes)
        .map_err(|e| e.to_string())?;
    check(
        replay_bytes == source_bytes,
        "replay at scale 1 differs from the source bytes",
    )?;
    Ok(format!(
        "max KS {worst:.4}, r_data_compute {r_synth:.3} vs {r_source:.3}, replay identical"
    ))
}

// ---------------------------------------------------------------- 7

fn job(
    offset: u64,
    maps: u64,
    map_seconds: f64,
    reduces: u64,
    reduce_seconds: f64,
) -> SyntheticJob {
    SyntheticJob {
        submit_offset: offset,
        input_bytes: 0,
        shuffle_bytes: 0,
        output_bytes: 0,
        map_tasks: Some(maps),
        reduce_tasks: Some(reduces),
        map_task_seconds: map_seconds,
        reduce_task_seconds: reduce_seconds,
        duration: 0.0,
        source_job_id: 0,
        name: None,
        input_path_hash: None,
        output_path_hash: None,
    }
}

fn workload(jobs: Vec<SyntheticJob>) -> SyntheticWorkload {
    SyntheticWorkload {
        jobs,
        target_machine_count: 1,
        scale_factor: 1.0,
        seed: 0,
        mode: Mode::ReplayScaled,
        origin: 0,
        span_seconds: 1,
    }
}

fn slots(nodes: u32, map: u32, reduce: u32, scheduler: Scheduler) -> SimConfig {
    SimConfig {
        nodes,
        map_slots_per_node: map,
        reduce_slots_per_node: reduce,
        scheduler,
    }
}

fn simulator() -> Outcome {
    let sim = |w: &SyntheticWorkload, c: &SimConfig| simulate(w, c).map_err(|e| e.to_string());
    let one = sim(
        &workload(vec![job(0, 1, 10.0, 0, 0.0)]),
        &slots(1, 1, 1, Scheduler::Fifo),
    )?;
    check(
        one.makespan == 10.0,
        format!("single task makespan {}", one.makespan),
    )?;
    let two = sim(
        &workload(vec![job(0, 1, 10.0, 0, 0.0), job(0, 1, 10.0, 0, 0.0)]),
        &slots(1, 1, 1, Scheduler::Fifo),
    )?;
    let done: Vec<f64> = two.jobs.iter().map(|j| j.completion).collect();
    check(done == [10.0, 20.0], format!("fifo completions {done:?}"))?;
    let mr = sim(
        &workload(vec![job(0, 2, 20.0, 1, 5.0)]),
        &slots(1, 2, 1, Scheduler::Fifo),
    )?;
    check(
        mr.makespan == 15.0,
        format!("map+reduce makespan {}", mr.makespan),
    )?;

    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut jobs: Vec<SyntheticJob> = (0..r.random_range(1..60))
            .map(|_| {
                let maps = r.random_range(0..8);
                let reduces = r.random_range(0..4);
                // at least a second per task keeps microsecond rounding under 1e-6
                let per = |r: &mut ChaCha8Rng, n: u64| {
                    if n == 0 {
                        0.0
                    } else {
                        n as f64 * r.random_range(1.0..120.0)
                    }
                };
                let ms = per(&mut r, maps);
                let rs = per(&mut r, reduces);
                job(r.random_range(0..3600), maps, ms, reduces, rs)
            })
            .collect();
        jobs.sort_by_key(|j| j.submit_offset);
        let w = workload(jobs);
        let scheduler = if i % 2 == 0 {
            Scheduler::Fifo
        } else {
            Scheduler::Fair
        };
        let config = slots(
            r.random_range(1..5),
            r.random_range(1..4),
            r.random_range(1..3),
            scheduler,
        );
        let result = sim(&w, &config)?;
        let want: f64 = w
            .jobs
            .iter()
            .map(|j| j.map_task_seconds + j.reduce_task_seconds)
            .sum();
        let got = result.busy_map_slot_seconds + result.busy_reduce_slot_seconds;
        let rel = if want == 0.0 {
            got
        } else {
            (got - want).abs() / want
        };
        check(
            rel <= 1e-6,
            format!("workload {i}: busy {got} vs task-seconds {want}"),
        )?;
        worst = worst.max(rel);
    }
    Ok(format!(
        "hand examples exact, max conservation error {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- 8

/// List-based reference cache: front is least recently used.
fn reference_cache(events: &[AccessEvent], config: &CacheConfig) -> (u64, u64, u64, u64) {
    let mut list: Vec<(u64, u64, f64)> = Vec::new();
    let (mut accesses, mut hits, mut evictions, mut peak) = (0, 0, 0, 0);
    let admit = |size: u64| {
        size <= config.capacity_bytes
            && match config.admission {
                Admission::All => true,
                Admission::SizeAtMost(t) => size <= t,
            }
    };
    for ev in events {
        if let Eviction::IdleTtl(ttl) = config.eviction {
            let before = list.len();
            list.retain(|e| ev.time - e.2 <= ttl);
            evictions += (before - list.len()) as u64;
        }
        let pos = list.iter().position(|e| e.0 == ev.file_digest);
        if ev.kind == AccessKind::InputRead {
            accesses += 1;
            if let Some(p) = pos {
                if list[p].1 >= ev.file_size {
                    hits += 1;
                    let mut e = list.remove(p);
                    e.2 = ev.time;
                    list.push(e);
                    continue;
                }
            }
        }
        if let Some(p) = pos {
            list.remove(p);
        }
        if admit(ev.file_size) {
            while list.iter().map(|e| e.1).sum::<u64>() + ev.file_size > config.capacity_bytes {
                list.remove(0);
                evictions += 1;
            }
            list.push((ev.file_digest, ev.file_size, ev.time));
            peak = peak.max(list.iter().map(|e| e.1).sum());
        }
    }
    (accesses, hits, evictions, peak)
}

fn configs() -> Vec<CacheConfig> {
    let mut out = Vec::new();
    for capacity in [1, 4, 7, 12, 1000] {
        for admission in [Admission::All, Admission::SizeAtMost(3)] {
            for eviction in [Eviction::Lru, Eviction::IdleTtl(1.5)] {
                out.push(CacheConfig {
                    capacity_bytes: capacity,
                    admission,
                    eviction,
                });
            }
        }
    }
    out
}

fn compare(events: &[AccessEvent], configs: &[CacheConfig]) -> Result<(), String> {
    for c in configs {
        let got = simulate_cache(events, c).map_err(|e| e.to_string())?;
        let want = reference_cache(events, c);
        if (
            got.accesses,
            got.hits,
            got.evictions,
            got.peak_resident_bytes,
        ) != want
        {
            return Err(format!("{c:?} on {events:?}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

fn events_from_code(
    mut code: usize,
    len: usize,
    alphabet: usize,
    with_kinds: bool,
    sizes: &[u64],
) -> Vec<AccessEvent> {
    (0..len)
        .map(|t| {
            let symbol = code % alphabet;
            code /= alphabet;
            let (file, write) = if with_kinds {
                (symbol / 2, symbol % 2 == 1)
            } else {
                (symbol, false)
            };
            AccessEvent {
                time: t as f64,
                file_digest: file as u64,
                file_size: sizes[file],
                kind: if write {
                    AccessKind::OutputWrite
                } else {
                    AccessKind::InputRead
                },
            }
        })
        .collect()
}

fn cache_equivalence() -> Outcome {
    let configs = configs();
    let sizes = [1u64, 2, 3, 5];
    let mut streams = 0u64;
    // every read-only stream up to 8 events over 4 files
    for len in 1..=8 {
        for code in 0..4usize.pow(len as u32) {
            let events = events_from_code(code, len, 4, false, &sizes);
            compare(&events, &configs)?;
            // compulsory misses: with room for everything, only first reads miss
            let distinct = {
                let mut d: Vec<u64> = events.iter().map(|e| e.file_digest).collect();
                d.sort_unstable();
                d.dedup();
                d.len() as u64
            };
            let unbounded =
                simulate_cache(&events, &CacheConfig::lru(1000)).map_err(|e| e.to_string())?;
            check(
                unbounded.accesses - unbounded.hits == distinct,
                format!(
                    "compulsory misses on {events:?}: {} vs {distinct}",
                    unbounded.accesses - unbounded.hits
                ),
            )?;
            streams += 1;
        }
    }
    // every read/write stream up to 6 events over 4 files
    for len in 1..=6 {
        for code in 0..8usize.pow(len as u32) {
            compare(&events_from_code(code, len, 8, true, &sizes), &configs)?;
            streams += 1;
        }
    }
    // random 20-event streams with growing files and uneven gaps
    let mut r = rng(8);
    for _ in 0..20_000 {
        let mut t = 0.0;
        let events: Vec<AccessEvent> = (0..20)
            .map(|_| {
                t += [0.0, 0.5, 1.0, 2.0][r.random_range(0..4)];
                let file = r.random_range(0..4u64);
                AccessEvent {
                    time: t,
                    file_digest: file,
                    file_size: sizes[file as usize] + r.random_range(0..2),
                    kind: if r.random_bool(0.3) {
                        AccessKind::OutputWrite
                    } else {
                        AccessKind::InputRead
                    },
                }
            })
            .collect();
        compare(&events, &configs)?;
        streams += 1;
    }
    Ok(format!("{streams} streams x {} configs", configs.len()))
}

// ---------------------------------------------------------------- 9

fn closure() -> Outcome {
    let source = generate_trace(&GeneratorConfig {
        jobs: 5_000,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let model = build_workload_model(&source, HOUR).map_err(|e| e.to_string())?;
    let synth = synthesize(&model, 100, model.span_seconds(), Mode::Sampled, 42)
        .map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    synth.write_jsonl(&mut bytes).map_err(|e| e.to_string())?;
    let trace = parse(&bytes, 100)?;
    let validation = validate(&trace);
    check(
        validation.anomalies.is_empty(),
        format!("{} anomalies", validation.anomalies.len()),
    )?;
    let analysis = analyze(&trace, &AnalysisOptions::default());
    let skipped = analysis.skipped();
    check(skipped.is_empty(), format!("skipped sections: {skipped:?}"))?;
    let sections = analysis.report["sections"]
        .as_object()
        .map_or(0, |s| s.len());
    Ok(format!("{} jobs, {sections} sections ok", trace.len()))
}

// ---------------------------------------------------------------- 10

fn child_max_rss_bytes() -> u64 {
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    // SAFETY: getrusage only writes into the provided struct.
    let rc = unsafe { libc::getrusage(libc::RUSAGE_CHILDREN, &mut usage) };
    if rc == 0 {
        usage.ru_maxrss as u64 * 1024
    } else {
        0
    }
}

fn scale() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let path = dir.path().join("million.jsonl");
    let records = generate_records(&GeneratorConfig {
        jobs: 1_000_000,
        span_seconds: 30 * 86_400,
        ..GeneratorConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let file = File::create(&path).map_err(|e| e.to_string())?;
    write_jsonl(BufWriter::new(file), &records).map_err(|e| e.to_string())?;
    drop(records);

    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mrtrace"))
        .args(["analyze", "--trace"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("report.json"))
        .arg("--plots")
        .arg(dir.path().join("plots"))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rss = child_max_rss_bytes();
    check(
        out.status.success(),
        format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ),
    )?;
    let report: serde_json::Value = serde_json::from_reader(BufReader::new(
        File::open(dir.path().join("report.json")).map_err(|e| e.to_string())?,
    ))
    .map_err(|e| e.to_string())?;
    check(
        report["trace"]["records"] == 1_000_000,
        "report does not cover every job",
    )?;
    check(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    check(rss < 2 << 30, format!("peak RSS {} MB", rss >> 20))?;
    Ok(format!(
        "{:.1} s, peak RSS {} MB",
        elapsed.as_secs_f64(),
        rss >> 20
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("zipf_recovery", zipf_recovery),
        ("burstiness_references", burstiness_references),
        ("correlation_oracle", correlations),
        ("planted_clusters", planted_clusters),
        ("eighty_x_exhaustive", eighty_x_exhaustive),
        ("synthesis_fidelity", synthesis_fidelity),
        ("simulator_conservation", simulator),
        ("cache_reference_equivalence", cache_equivalence),
        ("synthesis_analysis_closure", closure),
        ("million_job_analyze", scale),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
