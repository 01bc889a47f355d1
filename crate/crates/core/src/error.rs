use alloc::string::String;
use core::fmt;

use crate::inference::BlockId;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An event timestamp lies before the bucketing origin.
    TimestampBeforeOrigin {
        timestamp: i64,
        origin: i64,
    },
    EmptyInput,
    InvalidDimensions(String),
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    InvalidHyperparams(String),
    InvalidConfig(String),
    EvalStepOutOfRange {
        step: usize,
        n_steps: usize,
    },
    EmptyCandidates,
    EmptyTestSet,
    NoValidFolds,
    /// The ELBO (or a block of it) became non-finite.
    Diverged {
        block: Option<BlockId>,
        sweep: usize,
    },
    Sampling(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TimestampBeforeOrigin { timestamp, origin } => {
                write!(f, "timestamp {timestamp} precedes bucketing origin {origin}")
            }
            Error::EmptyInput => write!(f, "no input events"),
            Error::InvalidDimensions(msg) => write!(f, "invalid dimensions: {msg}"),
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::InvalidHyperparams(msg) => write!(f, "invalid hyperparameters: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid fit configuration: {msg}"),
            Error::EvalStepOutOfRange { step, n_steps } => {
                write!(f, "evaluation step {step} outside [1, {n_steps})")
            }
            Error::EmptyCandidates => write!(f, "candidate set is empty after exclusion"),
            Error::EmptyTestSet => write!(f, "empty test set"),
            Error::NoValidFolds => write!(f, "no evaluation fold has any scorable user"),
            Error::Diverged { block: Some(b), sweep } => {
                write!(f, "non-finite objective in sweep {sweep} at block {b}")
            }
            Error::Diverged { block: None, sweep } => {
                write!(f, "non-finite ELBO after sweep {sweep}")
            }
            Error::Sampling(msg) => write!(f, "sampling failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
