use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("horizon mismatch: expected {expected}, got {got}")]
    HorizonMismatch { expected: usize, got: usize },
    #[error("indifference set is empty: {0}")]
    InfeasibleSet(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("no closed-form expected set for sampler {0}")]
    UnsupportedSampler(String),
    #[error("non-finite gradient at iteration {iteration}: {detail}")]
    NonFiniteGradient { iteration: usize, detail: String },
    #[error("batch {0} is empty")]
    EmptyBatch(usize),
    #[error("batch {batch} references consumer {index} but population has {n}")]
    BatchIndexOutOfRange { batch: usize, index: usize, n: usize },
    #[error("revenue at the candidate price is not positive ({0:e})")]
    NonpositiveRevenue(f64),
    #[error("periodic pricing needs a 24-period day, got {0}")]
    HorizonNotDaily(usize),
    #[error("set {0} cannot be tiled over multiple days")]
    UnsupportedTiling(&'static str),
    #[error("enumeration of {0} joint profiles exceeds the limit of {1}")]
    EnumerationTooLarge(u128, u128),
    #[error("all warm-up parameters are zero")]
    DegenerateParams,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: String,
        message: String,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("day `{day}` has {rows} rows, expected {expected}")]
    WrongHorizon {
        day: String,
        rows: usize,
        expected: usize,
    },
    #[error("need at least 2 days to fit statistics, got {0}")]
    TooFewDays(usize),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
