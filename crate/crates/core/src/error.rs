use thiserror::Error;

/// Errors raised by model construction, simulation and numerics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("configuration has {actual} sites, model expects {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range (0..{len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation not supported for this model: {0}")]
    Unsupported(String),
    #[error("absorbing state: total rate is zero and t_max is infinite")]
    AbsorbingState,
    #[error("predicate already holds in the initial state")]
    PredicateHoldsInitially,
    #[error("odd syndrome of size {0}")]
    OddSyndrome(usize),
    #[error("syndrome mismatch between error and correction")]
    SyndromeMismatch,
    #[error("decoder failure at t = {time} in trajectory {trajectory}: {source}")]
    DecoderFailure {
        trajectory: usize,
        time: f64,
        source: Box<Error>,
    },
    #[error("state space too large: {0} states")]
    StateSpaceTooLarge(u128),
    #[error("eigensolver did not converge: {0}")]
    NonConvergence(String),
    #[error("generator is not reversible: max asymmetry {max_asymmetry:e}, min stationary weight {min_weight:e}")]
    NotReversible { max_asymmetry: f64, min_weight: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("channel is not trace preserving: completeness deviation {0:e}")]
    NotTracePreserving(f64),
    #[error("irreversible transition: zero backward rate at t = {0}")]
    ZeroBackwardRate(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
