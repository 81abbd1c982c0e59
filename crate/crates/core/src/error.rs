use thiserror::Error;

use crate::engine::CheckpointError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator label {label:?} for the {case} case")]
    InvalidLabel { case: &'static str, label: Vec<u8> },

    #[error("matrix is not Hermitian: max |A - A^H| entry deviation {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has a component of Frobenius norm {norm:e} outside the {case} generator span")]
    OutOfSpan { case: &'static str, norm: f64 },

    #[error("block diagonal must be traceless, A+B+C+D = {sum:e}")]
    TraceCondition { sum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alpha = {alpha} is outside the domain alpha >= 0")]
    Domain { alpha: f64 },

    #[error("series ratio {ratio} >= 1 at term {index}")]
    SeriesDivergence { index: usize, ratio: f64 },

    #[error("series did not reach the requested tolerance within {terms} terms")]
    SeriesCap { terms: usize },

    #[error("no positive samples among {n_total} draws")]
    NoPositiveSamples { n_total: u64 },

    #[error("tally counter `{field}` overflowed")]
    CounterOverflow { field: &'static str },

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
