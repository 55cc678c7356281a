//! Canonical per-job trace model, parsing and validation.
//!
//! A trace is a sequence of per-job summaries. On disk it is JSON Lines with
//! one object per job; CSV with a header row is accepted as well. Optional
//! dimensions are absent keys (or empty cells) and stay `None` in memory, so
//! analyses can skip them instead of treating them as zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for [`hash_path`]. Echoed in reports so access analyses are reproducible.
pub const PATH_HASH_SEED: u64 = 0x6d72_7472_6163_6531;

/// XXH64 digest of a file path under [`PATH_HASH_SEED`].
pub fn hash_path(path: &str) -> Result<u64> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(xxhash_rust::xxh64::xxh64(path.as_bytes(), PATH_HASH_SEED))
}

/// Field names of the canonical schema, in serialization order.
pub const FIELDS: [&str; 13] = [
    "job_id",
    "name",
    "submit_time",
    "duration",
    "input_bytes",
    "shuffle_bytes",
    "output_bytes",
    "map_task_seconds",
    "reduce_task_seconds",
    "map_tasks",
    "reduce_tasks",
    "input_path_hash",
    "output_path_hash",
];

/// One job's summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Whole seconds since the epoch.
    pub submit_time: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_task_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduce_task_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_tasks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduce_tasks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_path_hash: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path_hash: Option<u64>,
}

impl JobRecord {
    pub fn new(job_id: u64, submit_time: i64) -> Self {
        JobRecord {
            job_id,
            submit_time,
            ..Default::default()
        }
    }

    /// Aggregate I/O: input + shuffle + output, if all three are known.
    pub fn io_bytes(&self) -> Option<u64> {
        Some(
            self.input_bytes?
                .saturating_add(self.shuffle_bytes?)
                .saturating_add(self.output_bytes?),
        )
    }

    /// Map plus reduce task-seconds, if both are known.
    pub fn task_seconds(&self) -> Option<f64> {
        Some(self.map_task_seconds? + self.reduce_task_seconds?)
    }

    /// The six clustering dimensions in raw units, if all are present:
    /// input, shuffle, output bytes, duration, map and reduce task-seconds.
    pub fn features(&self) -> Option<[f64; 6]> {
        Some([
            self.input_bytes? as f64,
            self.shuffle_bytes? as f64,
            self.output_bytes? as f64,
            self.duration?,
            self.map_task_seconds?,
            self.reduce_task_seconds?,
        ])
    }

    pub fn bytes(&self, dim: SizeDimension) -> Option<u64> {
        match dim {
            SizeDimension::Input => self.input_bytes,
            SizeDimension::Shuffle => self.shuffle_bytes,
            SizeDimension::Output => self.output_bytes,
        }
    }

    pub fn path_hash(&self, side: Side) -> Option<u64> {
        match side {
            Side::Input => self.input_path_hash,
            Side::Output => self.output_path_hash,
        }
    }

    /// Byte count of the file on `side` (input or output bytes).
    pub fn side_bytes(&self, side: Side) -> Option<u64> {
        match side {
            Side::Input => self.input_bytes,
            Side::Output => self.output_bytes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDimension {
    Input,
    Shuffle,
    Output,
}

impl SizeDimension {
    pub const ALL: [SizeDimension; 3] = [
        SizeDimension::Input,
        SizeDimension::Shuffle,
        SizeDimension::Output,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeDimension::Input => "input",
            SizeDimension::Shuffle => "shuffle",
            SizeDimension::Output => "output",
        }
    }
}

/// Which path of a job an access refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Input,
    Output,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Input, Side::Output];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Input => "input",
            Side::Output => "output",
        }
    }
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: i64,
    pub end: i64,
}

impl Span {
    pub fn len(&self) -> u64 {
        (self.end - self.start).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// An immutable, submit-time ordered collection of job records.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    label: String,
    machine_count: u32,
    records: Vec<JobRecord>,
    span: Span,
}

impl Trace {
    /// Builds a trace, stably sorting records by submit time. The span is
    /// `[min submit, max submit + 1)`.
    pub fn new(
        label: impl Into<String>,
        machine_count: u32,
        mut records: Vec<JobRecord>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if machine_count == 0 {
            return Err(Error::InvalidArgument(
                "machine count must be positive".into(),
            ));
        }
        records.sort_by_key(|r| r.submit_time);
        let span = Span {
            start: records[0].submit_time,
            end: records[records.len() - 1].submit_time + 1,
        };
        Ok(Trace {
            label: label.into(),
            machine_count,
            records,
            span,
        })
    }

    /// Replaces the derived span with an explicit one that must cover every submit time.
    pub fn with_span(mut self, span: Span) -> Result<Self> {
        let first = self.records[0].submit_time;
        let last = self.records[self.records.len() - 1].submit_time;
        if span.start > first || span.end <= last {
            return Err(Error::InvalidArgument(format!(
                "span [{}, {}) does not cover submit times [{first}, {last}]",
                span.start, span.end
            )));
        }
        self.span = span;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn machine_count(&self) -> u32 {
        self.machine_count
    }

    pub fn records(&self) -> &[JobRecord] {
        &self.records
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total bytes moved over jobs with input, shuffle and output all present.
    pub fn bytes_moved(&self) -> u64 {
        self.records.iter().filter_map(JobRecord::io_bytes).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to JSON Lines.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown trace format `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// Cluster metadata that the per-job formats do not carry.
#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub label: String,
    pub machine_count: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            label: "trace".into(),
            machine_count: 1,
        }
    }
}

/// On-disk shape: everything optional so missing required fields get a
/// dedicated error, and times may carry fractions that are truncated.
#[derive(Deserialize, Default)]
struct RawRecord {
    job_id: Option<u64>,
    name: Option<String>,
    submit_time: Option<f64>,
    duration: Option<f64>,
    input_bytes: Option<u64>,
    shuffle_bytes: Option<u64>,
    output_bytes: Option<u64>,
    map_task_seconds: Option<f64>,
    reduce_task_seconds: Option<f64>,
    map_tasks: Option<u64>,
    reduce_tasks: Option<u64>,
    input_path_hash: Option<u64>,
    output_path_hash: Option<u64>,
}

impl RawRecord {
    fn into_record(self, line: usize) -> Result<JobRecord> {
        let job_id = self.job_id.ok_or(Error::MissingRequiredField {
            line,
            field: "job_id",
        })?;
        let submit = self.submit_time.ok_or(Error::MissingRequiredField {
            line,
            field: "submit_time",
        })?;
        if !submit.is_finite() {
            return Err(malformed(line, "submit_time is not finite"));
        }
        for (field, value) in [
            ("duration", self.duration),
            ("map_task_seconds", self.map_task_seconds),
            ("reduce_task_seconds", self.reduce_task_seconds),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(malformed(
                        line,
                        &format!("{field} must be a non-negative number"),
                    ));
                }
            }
        }
        Ok(JobRecord {
            job_id,
            name: self.name,
            submit_time: submit.trunc() as i64,
            duration: self.duration,
            input_bytes: self.input_bytes,
            shuffle_bytes: self.shuffle_bytes,
            output_bytes: self.output_bytes,
            map_task_seconds: self.map_task_seconds,
            reduce_task_seconds: self.reduce_task_seconds,
            map_tasks: self.map_tasks,
            reduce_tasks: self.reduce_tasks,
            input_path_hash: self.input_path_hash,
            output_path_hash: self.output_path_hash,
        })
    }
}

fn malformed(line: usize, reason: &str) -> Error {
    Error::MalformedRecord {
        line,
        reason: reason.to_string(),
    }
}

/// Parses a trace in the declared format. Blank JSON lines are skipped.
pub fn parse_trace<R: BufRead>(source: R, format: Format, opts: &ParseOptions) -> Result<Trace> {
    let records = match format {
        Format::Jsonl => parse_jsonl(source)?,
        Format::Csv => parse_csv(source)?,
    };
    Trace::new(opts.label.clone(), opts.machine_count, records)
}

fn parse_jsonl<R: BufRead>(source: R) -> Result<Vec<JobRecord>> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, &e.to_string()))?;
        records.push(raw.into_record(line_no)?);
    }
    Ok(records)
}

fn parse_csv<R: BufRead>(source: R) -> Result<Vec<JobRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, &e.to_string()))?
        .clone();
    let mut column: HashMap<&str, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if let Some(field) = FIELDS.iter().find(|f| **f == h.trim()) {
            column.insert(field, i);
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            malformed(line, &e.to_string())
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell = |field: &str| -> Option<&str> {
            column
                .get(field)
                .and_then(|&i| row.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        fn num<T: FromStr>(line: usize, field: &str, cell: Option<&str>) -> Result<Option<T>> {
            cell.map(|s| {
                s.parse::<T>()
                    .map_err(|_| malformed(line, &format!("cannot parse {field} from `{s}`")))
            })
            .transpose()
        }
        let raw = RawRecord {
            job_id: num(line, "job_id", cell("job_id"))?,
            name: cell("name").map(str::to_string),
            submit_time: num(line, "submit_time", cell("submit_time"))?,
            duration: num(line, "duration", cell("duration"))?,
            input_bytes: num(line, "input_bytes", cell("input_bytes"))?,
            shuffle_bytes: num(line, "shuffle_bytes", cell("shuffle_bytes"))?,
            output_bytes: num(line, "output_bytes", cell("output_bytes"))?,
            map_task_seconds: num(line, "map_task_seconds", cell("map_task_seconds"))?,
            reduce_task_seconds: num(line, "reduce_task_seconds", cell("reduce_task_seconds"))?,
            map_tasks: num(line, "map_tasks", cell("map_tasks"))?,
            reduce_tasks: num(line, "reduce_tasks", cell("reduce_tasks"))?,
            input_path_hash: num(line, "input_path_hash", cell("input_path_hash"))?,
            output_path_hash: num(line, "output_path_hash", cell("output_path_hash"))?,
        };
        records.push(raw.into_record(line)?);
    }
    Ok(records)
}

/// Writes records in the canonical JSON Lines format.
pub fn write_jsonl<'a, W, I>(mut out: W, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a JobRecord>,
{
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub job_id: u64,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub record_count: usize,
    pub missing_field_counts: BTreeMap<String, usize>,
    pub anomalies: Vec<Anomaly>,
}

/// Counts missing optional fields and lists records that break the
/// per-job invariants.
pub fn validate(trace: &Trace) -> ValidationReport {
    let mut missing: BTreeMap<String, usize> = FIELDS
        .iter()
        .filter(|f| !matches!(**f, "job_id" | "submit_time"))
        .map(|f| (f.to_string(), 0))
        .collect();
    let mut anomalies = Vec::new();
    let mut seen = HashMap::with_capacity(trace.len());

    for r in trace.records() {
        let presence = [
            ("name", r.name.is_some()),
            ("duration", r.duration.is_some()),
            ("input_bytes", r.input_bytes.is_some()),
            ("shuffle_bytes", r.shuffle_bytes.is_some()),
            ("output_bytes", r.output_bytes.is_some()),
            ("map_task_seconds", r.map_task_seconds.is_some()),
            ("reduce_task_seconds", r.reduce_task_seconds.is_some()),
            ("map_tasks", r.map_tasks.is_some()),
            ("reduce_tasks", r.reduce_tasks.is_some()),
            ("input_path_hash", r.input_path_hash.is_some()),
            ("output_path_hash", r.output_path_hash.is_some()),
        ];
        for (field, present) in presence {
            if !present {
                *missing.get_mut(field).expect("known field") += 1;
            }
        }

        let mut flag = |description: String| {
            anomalies.push(Anomaly {
                job_id: r.job_id,
                description,
            })
        };
        if *seen.entry(r.job_id).and_modify(|c| *c += 1).or_insert(1u32) == 2 {
            flag("duplicate job_id".into());
        }
        if let Some(d) = r.duration {
            if !(d.is_finite() && d >= 0.0) {
                flag(format!("invalid duration {d}"));
            }
        }
        for (field, value) in [
            ("map_task_seconds", r.map_task_seconds),
            ("reduce_task_seconds", r.reduce_task_seconds),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    flag(format!("invalid {field} {v}"));
                }
            }
        }
        if let (Some(0), Some(s)) = (r.map_tasks, r.map_task_seconds) {
            if s > 0.0 {
                flag(format!("map_tasks is 0 but map_task_seconds is {s}"));
            }
        }
        if let (Some(0), Some(s)) = (r.reduce_tasks, r.reduce_task_seconds) {
            if s > 0.0 {
                flag(format!("reduce_tasks is 0 but reduce_task_seconds is {s}"));
            }
        }
        if let (Some(0), Some(b)) = (r.reduce_tasks, r.shuffle_bytes) {
            if b > 0 {
                flag(format!("map-only job has shuffle_bytes {b}"));
            }
        }
    }

    ValidationReport {
        record_count: trace.len(),
        missing_field_counts: missing,
        anomalies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(job_id: u64, submit: i64) -> JobRecord {
        JobRecord {
            job_id,
            name: Some(format!("job_{job_id}")),
            submit_time: submit,
            duration: Some(30.0),
            input_bytes: Some(100),
            shuffle_bytes: Some(10),
            output_bytes: Some(5),
            map_task_seconds: Some(40.0),
            reduce_task_seconds: Some(8.0),
            map_tasks: Some(4),
            reduce_tasks: Some(1),
            input_path_hash: Some(job_id * 7),
            output_path_hash: Some(job_id * 11),
        }
    }

    fn jsonl(records: &[JobRecord]) -> Vec<u8> {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, records).unwrap();
        buf
    }

    #[test]
    fn parses_sorted_jsonl() {
        let records = vec![full(1, 0), full(2, 10), full(3, 20)];
        let trace = parse_trace(
            &jsonl(&records)[..],
            Format::Jsonl,
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.records(), &records[..]);
        assert_eq!(trace.span(), Span { start: 0, end: 21 });
    }

    #[test]
    fn missing_output_hash_stays_missing() {
        let src = br#"{"job_id":1,"submit_time":5,"input_bytes":10,"input_path_hash":99}"#;
        let trace = parse_trace(&src[..], Format::Jsonl, &ParseOptions::default()).unwrap();
        let r = &trace.records()[0];
        assert_eq!(r.output_path_hash, None);
        assert_eq!(r.output_bytes, None);
        assert_eq!(r.input_path_hash, Some(99));
    }

    #[test]
    fn negative_bytes_are_malformed() {
        let src = b"{\"job_id\":1,\"submit_time\":0}\n{\"job_id\":2,\"submit_time\":1,\"input_bytes\":-5}\n";
        match parse_trace(&src[..], Format::Jsonl, &ParseOptions::default()) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_task_seconds_are_malformed() {
        let src = br#"{"job_id":1,"submit_time":0,"map_task_seconds":-1.5}"#;
        assert!(matches!(
            parse_trace(&src[..], Format::Jsonl, &ParseOptions::default()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn required_fields_and_empty_trace() {
        let no_id = br#"{"submit_time":0}"#;
        assert!(matches!(
            parse_trace(&no_id[..], Format::Jsonl, &ParseOptions::default()),
            Err(Error::MissingRequiredField {
                field: "job_id",
                ..
            })
        ));
        let no_time = br#"{"job_id":3}"#;
        assert!(matches!(
            parse_trace(&no_time[..], Format::Jsonl, &ParseOptions::default()),
            Err(Error::MissingRequiredField {
                field: "submit_time",
                ..
            })
        ));
        assert!(matches!(
            parse_trace(&b"\n\n"[..], Format::Jsonl, &ParseOptions::default()),
            Err(Error::EmptyTrace)
        ));
        assert!(matches!(
            parse_trace(&b"{not json"[..], Format::Jsonl, &ParseOptions::default()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn fractional_submit_time_truncates() {
        let src = br#"{"job_id":1,"submit_time":12.9}"#;
        let trace = parse_trace(&src[..], Format::Jsonl, &ParseOptions::default()).unwrap();
        assert_eq!(trace.records()[0].submit_time, 12);
    }

    #[test]
    fn stable_sort_on_ties() {
        let records = vec![full(5, 10), full(1, 0), full(9, 10), full(2, 10)];
        let trace = Trace::new("t", 1, records).unwrap();
        let ids: Vec<u64> = trace.records().iter().map(|r| r.job_id).collect();
        assert_eq!(ids, vec![1, 5, 9, 2]);
    }

    #[test]
    fn csv_empty_cells_are_missing() {
        let src = "job_id,name,submit_time,input_bytes,shuffle_bytes\n1,etl,30,100,\n2,,10.5,,7\n";
        let trace = parse_trace(src.as_bytes(), Format::Csv, &ParseOptions::default()).unwrap();
        let r = trace.records();
        assert_eq!(r[0].job_id, 2);
        assert_eq!(r[0].submit_time, 10);
        assert_eq!(r[0].name, None);
        assert_eq!(r[0].input_bytes, None);
        assert_eq!(r[0].shuffle_bytes, Some(7));
        assert_eq!(r[1].name.as_deref(), Some("etl"));
        assert_eq!(r[1].shuffle_bytes, None);
    }

    #[test]
    fn csv_bad_cell_reports_line() {
        let src = "job_id,submit_time,input_bytes\n1,0,5\n2,1,-3\n";
        assert!(matches!(
            parse_trace(src.as_bytes(), Format::Csv, &ParseOptions::default()),
            Err(Error::MalformedRecord { line: 3, .. })
        ));
    }

    #[test]
    fn validate_complete_trace_has_no_missing() {
        let trace = Trace::new("t", 1, (0..10).map(|i| full(i, i as i64)).collect()).unwrap();
        let report = validate(&trace);
        assert_eq!(report.record_count, 10);
        assert!(report.missing_field_counts.values().all(|&c| c == 0));
        assert!(report.anomalies.is_empty());
    }

    #[test]
    fn validate_counts_missing_shuffle() {
        let mut records: Vec<_> = (0..5).map(|i| full(i, i as i64)).collect();
        records[1].shuffle_bytes = None;
        records[3].shuffle_bytes = None;
        let trace = Trace::new("t", 1, records).unwrap();
        let report = validate(&trace);
        assert_eq!(report.missing_field_counts["shuffle_bytes"], 2);
        assert_eq!(report.missing_field_counts["input_bytes"], 0);
    }

    #[test]
    fn validate_flags_reduce_time_without_reduces() {
        let mut bad = full(7, 0);
        bad.reduce_tasks = Some(0);
        bad.reduce_task_seconds = Some(30.0);
        bad.shuffle_bytes = Some(0);
        let trace = Trace::new("t", 1, vec![full(1, 0), bad]).unwrap();
        let report = validate(&trace);
        assert_eq!(report.anomalies.len(), 1);
        assert_eq!(report.anomalies[0].job_id, 7);
        assert!(report.anomalies[0]
            .description
            .contains("reduce_task_seconds"));
        assert_eq!(validate(&trace), report);
    }

    #[test]
    fn validate_flags_duplicate_ids() {
        let trace = Trace::new("t", 1, vec![full(1, 0), full(1, 5)]).unwrap();
        let report = validate(&trace);
        assert_eq!(report.anomalies.len(), 1);
        assert_eq!(report.anomalies[0].description, "duplicate job_id");
    }

    #[test]
    fn hash_path_is_deterministic() {
        assert_eq!(hash_path("/a/b").unwrap(), hash_path("/a/b").unwrap());
        assert_ne!(hash_path("/a/b").unwrap(), hash_path("/a/c").unwrap());
        assert!(matches!(hash_path(""), Err(Error::EmptyPath)));
    }

    #[test]
    fn hash_path_no_collisions_on_a_million_paths() {
        // Birthday bound: 1e12 / 2 pairs over 2^64 values gives p ≈ 2.7e-8.
        let mut digests: Vec<u64> = (0..1_000_000u64)
            .map(|i| {
                hash_path(&format!(
                    "/warehouse/{:x}/part-{i}",
                    i.wrapping_mul(0x9e37_79b9_7f4a_7c15)
                ))
                .unwrap()
            })
            .collect();
        digests.sort_unstable();
        digests.dedup();
        assert_eq!(digests.len(), 1_000_000);
    }

    #[test]
    fn with_span_must_cover_records() {
        let trace = Trace::new("t", 1, vec![full(1, 100)]).unwrap();
        assert!(trace
            .clone()
            .with_span(Span {
                start: 0,
                end: 3600
            })
            .is_ok());
        assert!(trace.with_span(Span { start: 0, end: 100 }).is_err());
    }
}
