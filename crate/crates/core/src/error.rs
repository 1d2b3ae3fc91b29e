use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("{0} has no inverse modulo {1}")]
    NoInverse(u64, u64),

    #[error("element {value} is out of range for modulus {modulus}")]
    OutOfRange { value: u64, modulus: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid polynomial coefficient k_{index} = {value}: {reason}")]
    InvalidCoefficient {
        index: usize,
        value: u64,
        reason: &'static str,
    },

    #[error("state space {q}^{m} (= {size:?}) exceeds exhaustion limit {limit}")]
    ExhaustionLimit {
        q: u32,
        m: usize,
        limit: u64,
        size: Option<u64>,
    },

    #[error("unsupported check configuration q={q}, m={m}, r={r}: {reason}")]
    UnsupportedCheck {
        q: u32,
        m: usize,
        r: usize,
        reason: &'static str,
    },

    #[error("masking digit {w} out of range for m={m}")]
    DigitOutOfRange { w: usize, m: usize },

    #[error("invalid residue moduli: {0}")]
    InvalidModuli(String),

    #[error("codeword is inside the working range; nothing to correct")]
    NothingToCorrect,

    #[error("invalid fault: {0}")]
    InvalidFault(String),

    #[error("fault target {target} is not available on pipeline {pipeline}")]
    IncompatibleFault {
        target: &'static str,
        pipeline: &'static str,
    },

    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed artifact: {0}")]
    Artifact(String),

    #[error("soundness violation: {0}")]
    Soundness(String),
}
