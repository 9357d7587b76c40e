use crate::bits::BitString;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed self-delimiting code: {0}")]
    MalformedCode(String),
    #[error("length mismatch: {left} vs {right} bits")]
    LengthMismatch { left: usize, right: usize },
    #[error("the empty string has no parent")]
    NoParent,
    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceLimit { what: String, limit: u64 },
    #[error("zero mass at {0}")]
    ZeroMass(BitString),
    #[error("no program within budget outputs {0}")]
    NoProgram(BitString),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("zero denominator at {0}")]
    ZeroDenominator(BitString),
    #[error("bad length: expected {expected} bits, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("not a semi-measure: {0}")]
    NotSemiMeasure(String),
    #[error("tree depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error("cache was written by machine {found}, expected {expected}")]
    MachineMismatch { expected: String, found: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
