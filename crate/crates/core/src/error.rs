use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", ViolationList(.0))]
    InvalidModel(Vec<Violation>),

    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("value {value} is not a symbol of the mode-{mode} alphabet")]
    NotInAlphabet { mode: usize, value: String },

    /// Exhaustive work would exceed the configured budget. Nothing is truncated.
    #[error("{what} needs {required} items, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: BigUint,
        budget: u64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The floating-point typicality margin is too close to zero to classify safely.
    #[error("typicality decision is numerically ambiguous (margin {margin:e} nats)")]
    AmbiguousTypicality { margin: f64 },

    #[error("no full-rank factorization of the target tensor")]
    NoFullRankFactorization,

    #[error(transparent)]
    Codeword(#[from] CodewordError),

    #[error("malformed dump: {0}")]
    Dump(String),

    /// A grid point of an experiment failed; `point` names it.
    #[error("{kind} at {point}: {source}")]
    Experiment {
        kind: &'static str,
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodewordError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("truncated codeword")]
    Truncated,
    #[error("{0} trailing bytes after codeword")]
    TrailingBytes(usize),
    #[error("unknown flag byte {0:#04x}")]
    BadFlag(u8),
    #[error("index has a leading zero byte")]
    NonCanonicalIndex,
    #[error("index {index} out of range for codebook of size {size}")]
    IndexOutOfRange { index: String, size: u64 },
    #[error("header does not match codebook: {0}")]
    HeaderMismatch(&'static str),
    #[error("flag does not agree with index {0}")]
    FlagMismatch(u64),
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
