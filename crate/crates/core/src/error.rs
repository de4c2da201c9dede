use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model spec:\n  - {}", .0.join("\n  - "))]
    InvalidSpec(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("level {level} exceeds truncation {truncation}")]
    LevelExceedsTruncation { level: usize, truncation: usize },

    #[error("P^({level}) is not strictly positive: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { level: usize, min_eigenvalue: f64 },

    #[error("vector is not real (imaginary residual {0:e})")]
    NotReal(f64),

    #[error("vector is not in the commutant real subspace (residual {0:e})")]
    NotInCommutant(f64),

    #[error("letter {index} is not supported in sector {sector} (leak {leak:e})")]
    LetterOutsideSector {
        index: usize,
        sector: usize,
        leak: f64,
    },

    #[error("index sets do not partition 0..{n}: I={i:?}, J={j:?}")]
    InvalidSplit { n: usize, i: Vec<usize>, j: Vec<usize> },

    #[error("word of length {len} does not fit below truncation {truncation}")]
    GuardBandOverflow { len: usize, truncation: usize },

    #[error("subspace is not U_t-invariant (residual {0:e})")]
    NotInvariant(f64),

    #[error("rank deficiency at level {level}: {detail}")]
    RankDeficient { level: usize, detail: String },

    #[error("moment of order {order} overflows truncation {truncation}")]
    TruncationOverflow { order: usize, truncation: usize },

    #[error("letter {0} is not a sector coordinate basis vector")]
    NonBasisLetter(usize),

    #[error("modular operator not positive at level {level}: min eigenvalue {min_eigenvalue:e}")]
    ModularNotPositive { level: usize, min_eigenvalue: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error at line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }
    }
}
