use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("state {state} is unreachable (zero tail mass)")]
    ZeroTail { state: u64 },

    #[error("chain is null recurrent: no stationary distribution exists")]
    NullRecurrent,

    #[error("truncation at {states} states loses mass {lost:e}, above tolerance {tolerance:e}")]
    TruncationTooSmall {
        states: usize,
        lost: f64,
        tolerance: f64,
    },

    #[error("tail bound {bound:e} could not be certified below {tolerance:e}")]
    TailNotCertifiable { bound: f64, tolerance: f64 },

    #[error("mismatched supports: {left} vs {right} states")]
    MismatchedSupport { left: usize, right: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("fit requires at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("nonpositive value {value} at n = {n} in series")]
    NonPositive { n: u64, value: f64 },

    #[error("invalid weight function: {0}")]
    InvalidWeights(String),

    #[error("at least 2 replicas are required, got {0}")]
    TooFewReplicas(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}
