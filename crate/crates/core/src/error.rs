use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("record on line {line} is missing required field `{field}`")]
    MissingRequiredField { line: usize, field: &'static str },
    #[error("trace contains no records")]
    EmptyTrace,
    #[error("path is empty")]
    EmptyPath,
    #[error("no data: {0}")]
    NoData(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bucket width must be positive")]
    InvalidBucketWidth,
    #[error("median of the series is zero; use wider buckets")]
    MedianZero,
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("series too short: {len} buckets, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("k = {k} exceeds the {rows} available rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("no job has all six dimensions present")]
    NoCompleteJobs,
    #[error("target span {target} s exceeds source span {source_span} s")]
    SpanTooLong { target: u64, source_span: u64 },
    #[error("workload is not sorted by submit offset (job {index})")]
    UnsortedWorkload { index: usize },
    #[error("access stream is not time-sorted (event {index})")]
    UnsortedStream { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
