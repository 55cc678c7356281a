//! Whole-file cache simulation over a trace's file access stream.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    InputRead,
    OutputWrite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub time: f64,
    pub file_digest: u64,
    pub file_size: u64,
    pub kind: AccessKind,
}

/// Input reads at submit time and output writes at `submit + duration`
/// (submit when the duration is unknown), sorted by time with ties kept in
/// job order. Missing sizes count as 0 bytes.
pub fn access_stream(trace: &Trace) -> Result<Vec<AccessEvent>> {
    let mut events = Vec::new();
    for r in trace.records() {
        let t = r.submit_time as f64;
        if let Some(d) = r.input_path_hash {
            events.push(AccessEvent {
                time: t,
                file_digest: d,
                file_size: r.input_bytes.unwrap_or(0),
                kind: AccessKind::InputRead,
            });
        }
        if let Some(d) = r.output_path_hash {
            events.push(AccessEvent {
                time: t + r.duration.unwrap_or(0.0),
                file_digest: d,
                file_size: r.output_bytes.unwrap_or(0),
                kind: AccessKind::OutputWrite,
            });
        }
    }
    if events.is_empty() {
        return Err(Error::NoData("trace has no path hashes".into()));
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    All,
    SizeAtMost(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eviction {
    Lru,
    /// Files idle for longer than this many seconds are dropped at each
    /// event; LRU evicts further if space is still short.
    IdleTtl(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity_bytes: u64,
    pub admission: Admission,
    pub eviction: Eviction,
}

impl CacheConfig {
    pub fn lru(capacity_bytes: u64) -> Self {
        CacheConfig {
            capacity_bytes,
            admission: Admission::All,
            eviction: Eviction::Lru,
        }
    }

    fn check(&self) -> Result<()> {
        if self.capacity_bytes == 0 {
            return Err(Error::InvalidArgument(
                "cache capacity must be positive".into(),
            ));
        }
        if self.admission == Admission::SizeAtMost(0) {
            return Err(Error::InvalidArgument(
                "admission threshold must be positive".into(),
            ));
        }
        if let Eviction::IdleTtl(ttl) = self.eviction {
            if ttl.is_nan() || ttl <= 0.0 {
                return Err(Error::InvalidArgument("idle ttl must be positive".into()));
            }
        }
        Ok(())
    }

    fn admits(&self, size: u64) -> bool {
        size <= self.capacity_bytes
            && match self.admission {
                Admission::All => true,
                Admission::SizeAtMost(t) => size <= t,
            }
    }
}

/// Hit statistics over input reads; writes populate the cache but are not
/// counted as accesses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CacheReport {
    pub accesses: u64,
    pub writes: u64,
    pub hits: u64,
    pub hit_rate_by_accesses: f64,
    pub hit_rate_by_bytes: f64,
    pub evictions: u64,
    pub peak_resident_bytes: u64,
}

struct Entry {
    size: u64,
    last_access: f64,
    seq: u64,
}

#[derive(Default)]
struct Cache {
    entries: HashMap<u64, Entry>,
    /// Recency order: touch sequence number to digest.
    order: BTreeMap<u64, u64>,
    resident: u64,
    next_seq: u64,
    evictions: u64,
    peak: u64,
}

impl Cache {
    fn remove(&mut self, digest: u64) {
        if let Some(e) = self.entries.remove(&digest) {
            self.order.remove(&e.seq);
            self.resident -= e.size;
        }
    }

    fn evict_oldest(&mut self) -> bool {
        let Some((_, digest)) = self.order.pop_first() else {
            return false;
        };
        let e = self
            .entries
            .remove(&digest)
            .expect("ordered entry is resident");
        self.resident -= e.size;
        self.evictions += 1;
        true
    }

    fn touch(&mut self, digest: u64, now: f64) {
        let seq = self.next_seq;
        self.next_seq += 1;
        let e = self
            .entries
            .get_mut(&digest)
            .expect("touched entry is resident");
        self.order.remove(&e.seq);
        e.seq = seq;
        e.last_access = now;
        self.order.insert(seq, digest);
    }

    fn expire(&mut self, now: f64, ttl: f64) {
        // recency order is also last-access order, so expired files form a prefix
        while let Some((_, &digest)) = self.order.first_key_value() {
            if now - self.entries[&digest].last_access > ttl {
                self.evict_oldest();
            } else {
                break;
            }
        }
    }

    fn insert(&mut self, config: &CacheConfig, digest: u64, size: u64, now: f64) {
        if !config.admits(size) {
            return;
        }
        while self.resident + size > config.capacity_bytes {
            if !self.evict_oldest() {
                break;
            }
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.entries.insert(
            digest,
            Entry {
                size,
                last_access: now,
                seq,
            },
        );
        self.order.insert(seq, digest);
        self.resident += size;
        self.peak = self.peak.max(self.resident);
    }
}

/// Replays `stream` through a whole-file cache. A read hits when the file
/// is resident at its current size or larger; a missed read or any write
/// (re)installs the file if the admission rule lets it in.
pub fn simulate_cache(stream: &[AccessEvent], config: &CacheConfig) -> Result<CacheReport> {
    config.check()?;
    if let Some(i) = stream.windows(2).position(|p| p[1].time < p[0].time) {
        return Err(Error::UnsortedStream { index: i + 1 });
    }
    let mut cache = Cache::default();
    let mut report = CacheReport::default();
    let (mut read_bytes, mut hit_bytes) = (0u128, 0u128);
    for ev in stream {
        if let Eviction::IdleTtl(ttl) = config.eviction {
            cache.expire(ev.time, ttl);
        }
        match ev.kind {
            AccessKind::InputRead => {
                report.accesses += 1;
                read_bytes += ev.file_size as u128;
                let hit = cache
                    .entries
                    .get(&ev.file_digest)
                    .is_some_and(|e| e.size >= ev.file_size);
                if hit {
                    report.hits += 1;
                    hit_bytes += ev.file_size as u128;
                    cache.touch(ev.file_digest, ev.time);
                } else {
                    cache.remove(ev.file_digest);
                    cache.insert(config, ev.file_digest, ev.file_size, ev.time);
                }
            }
            AccessKind::OutputWrite => {
                report.writes += 1;
                cache.remove(ev.file_digest);
                cache.insert(config, ev.file_digest, ev.file_size, ev.time);
            }
        }
    }
    report.evictions = cache.evictions;
    report.peak_resident_bytes = cache.peak;
    if report.accesses > 0 {
        report.hit_rate_by_accesses = report.hits as f64 / report.accesses as f64;
    }
    if read_bytes > 0 {
        report.hit_rate_by_bytes = hit_bytes as f64 / read_bytes as f64;
    }
    Ok(report)
}

/// Runs one simulation per config, in parallel; results keep input order.
pub fn sweep(stream: &[AccessEvent], configs: &[CacheConfig]) -> Result<Vec<CacheReport>> {
    configs
        .par_iter()
        .map(|c| simulate_cache(stream, c))
        .collect()
}

/// Sweep table with one row per `(parameter value, report)`.
pub fn write_sweep_tsv<W: Write>(
    mut out: W,
    parameter: &str,
    rows: &[(u64, CacheReport)],
) -> Result<()> {
    writeln!(out, "{parameter}\thit_rate_by_accesses\thit_rate_by_bytes")?;
    for (value, r) in rows {
        writeln!(
            out,
            "{value}\t{}\t{}",
            r.hit_rate_by_accesses, r.hit_rate_by_bytes
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::JobRecord;

    fn read(t: f64, digest: u64, size: u64) -> AccessEvent {
        AccessEvent {
            time: t,
            file_digest: digest,
            file_size: size,
            kind: AccessKind::InputRead,
        }
    }

    #[test]
    fn stream_from_trace() {
        let a = JobRecord {
            input_path_hash: Some(1),
            input_bytes: Some(5),
            output_path_hash: Some(2),
            output_bytes: Some(7),
            duration: Some(50.0),
            ..JobRecord::new(1, 0)
        };
        let b = JobRecord {
            input_path_hash: Some(1),
            input_bytes: Some(5),
            ..JobRecord::new(2, 100)
        };
        let trace = Trace::new("t", 1, vec![a, b]).unwrap();
        let s = access_stream(&trace).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].time, s[0].kind), (0.0, AccessKind::InputRead));
        assert_eq!(
            (s[1].time, s[1].kind, s[1].file_digest),
            (50.0, AccessKind::OutputWrite, 2)
        );
        assert_eq!((s[2].time, s[2].file_digest), (100.0, 1));
        let bare = Trace::new("t", 1, vec![JobRecord::new(1, 0)]).unwrap();
        assert!(matches!(access_stream(&bare), Err(Error::NoData(_))));
    }

    #[test]
    fn lru_thrash() {
        let s = [read(0.0, 1, 6), read(1.0, 2, 6), read(2.0, 1, 6)];
        let r = simulate_cache(&s, &CacheConfig::lru(10)).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.hit_rate_by_accesses, 0.0);
        assert_eq!(r.evictions, 2);
        assert_eq!(r.peak_resident_bytes, 6);
    }

    #[test]
    fn size_threshold_admits_nothing() {
        let s = [read(0.0, 1, 6), read(1.0, 2, 6), read(2.0, 1, 6)];
        let config = CacheConfig {
            admission: Admission::SizeAtMost(5),
            ..CacheConfig::lru(10)
        };
        let r = simulate_cache(&s, &config).unwrap();
        assert_eq!((r.hits, r.evictions, r.peak_resident_bytes), (0, 0, 0));
    }

    #[test]
    fn infinite_cache() {
        let s = [
            read(0.0, 1, 3),
            read(1.0, 2, 4),
            read(2.0, 1, 3),
            read(3.0, 2, 4),
            read(4.0, 1, 3),
        ];
        let r = simulate_cache(&s, &CacheConfig::lru(7)).unwrap();
        assert_eq!(r.hits, 3);
        assert!((r.hit_rate_by_bytes - 10.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn idle_ttl_expires() {
        let s = [read(0.0, 1, 1), read(5.0, 1, 1), read(20.0, 1, 1)];
        let config = CacheConfig {
            eviction: Eviction::IdleTtl(10.0),
            ..CacheConfig::lru(100)
        };
        let r = simulate_cache(&s, &config).unwrap();
        assert_eq!(r.hits, 1);
        assert_eq!(r.evictions, 1);
    }

    #[test]
    fn write_allocates() {
        let w = AccessEvent {
            kind: AccessKind::OutputWrite,
            ..read(0.0, 9, 4)
        };
        let r = simulate_cache(&[w, read(1.0, 9, 4)], &CacheConfig::lru(10)).unwrap();
        assert_eq!((r.accesses, r.writes, r.hits), (1, 1, 1));
    }

    #[test]
    fn unsorted_and_bad_config() {
        assert!(matches!(
            simulate_cache(&[read(2.0, 1, 1), read(1.0, 1, 1)], &CacheConfig::lru(1)),
            Err(Error::UnsortedStream { index: 1 })
        ));
        assert!(simulate_cache(&[], &CacheConfig::lru(0)).is_err());
    }
}
