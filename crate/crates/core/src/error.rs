use thiserror::Error;

use crate::precision::DyadicRational;

/// Failure to read a number from text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid number `{0}`")]
    Number(String),
    #[error("`{0}` is not a dyadic rational (denominator must be a power of two)")]
    NotDyadic(String),
}

/// Arithmetic that cannot be certified at the current precision or at all.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecisionError {
    #[error("division by an enclosure containing zero")]
    DivisionByZero,
    #[error("logarithm of an enclosure that is not strictly positive")]
    NonPositiveLog,
    #[error("need more precision: {0}")]
    NeedMorePrecision(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid ensemble description: {0}")]
    InvalidSpec(String),
    #[error("snapshot line {line}: {message}")]
    SnapshotParse { line: usize, message: String },
    #[error("prefix-free violation: `{0}` is a prefix of `{1}`")]
    PrefixFree(String, String),
    #[error("Kraft violation: {0}")]
    Kraft(String),
    #[error("checksum mismatch: file records {recorded}, programs sum to {computed}")]
    Checksum { recorded: String, computed: String },
    #[error("snapshot invariant violated: {0}")]
    Invariant(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("k = {k} exceeds the enumerated domain ({available} programs)")]
    KOutOfRange { k: u64, available: u64 },
    #[error("tail bound cannot reach width {requested}; achievable width is {achievable}")]
    TailTooWide {
        requested: DyadicRational,
        achievable: DyadicRational,
    },
    #[error("certification failure: {0}")]
    Certification(String),
    #[error("target outside the certified range: {0}")]
    OutOfRange(String),
    #[error("unresolved after precision escalation: {0}")]
    Unresolved(String),
    #[error("oracle exhausted: {0}")]
    OracleExhausted(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("certificate violation: {0}")]
    CertificateViolation(String),
    #[error("tables share no output")]
    DisjointOutputs,
}

pub type Result<T> = std::result::Result<T, Error>;
