use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unknown lattice name `{0}`")]
    UnknownLattice(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no lattice point within the supplied search radius")]
    SearchRadiusExhausted,

    #[error("enumeration produced more than {cap} points")]
    ResultTooLarge { cap: usize },

    #[error("element is not in the order: {0}")]
    NotAnOrderElement(String),

    #[error("no candidate with the requested index was found")]
    NoCandidate,

    #[error("partition index mismatch: expected {expected}, got {got}")]
    IndexMismatch { expected: u128, got: u128 },

    #[error("codebook of size {size} exceeds the cap {cap}")]
    CodebookTooLarge { size: u128, cap: u128 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("empty sample")]
    EmptySample,

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("packet length mismatch: expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid trellis: {0}")]
    InvalidTrellis(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
