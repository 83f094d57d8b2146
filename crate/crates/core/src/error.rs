use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two permutations (or a permutation and a replica split) disagree on
    /// the group degree.
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    /// An image sequence that is not a bijection on `0..m`.
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// A parameter outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An allocation or enumeration larger than the configured limit.
    #[error("{what} needs {required} units, limit is {limit}")]
    OverBudget {
        what: String,
        required: u128,
        limit: u128,
    },

    /// An exact integer result that does not fit the return type; use the
    /// log-domain variant instead.
    #[error("value out of range: {0}")]
    OutOfRange(String),

    /// The permutation Gram matrix could not be inverted.
    #[error("singular Gram matrix for m = {m}, d = {d} (condition estimate {condition:e})")]
    SingularGram { m: usize, d: f64, condition: f64 },

    #[error("config error: {0}")]
    Config(String),

    /// An existing output file that cannot be resumed safely.
    #[error("corrupt output {path}: {reason}")]
    CorruptOutput { path: PathBuf, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegreeMismatch { .. }
            | Error::InvalidPermutation(_)
            | Error::InvalidArgument(_) => 2,
            Error::Config(_) => 3,
            Error::OverBudget { .. } | Error::OutOfRange(_) => 4,
            Error::SingularGram { .. } => 5,
            Error::CorruptOutput { .. } => 6,
            Error::Io(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
