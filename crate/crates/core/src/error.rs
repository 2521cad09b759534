use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient a[{index}] = {value} violates the positivity rule a_k > 0 (must exceed 1e-12)")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("number of modes n = {0} is outside 1..=64")]
    ModeCount(usize),

    #[error("non-finite state at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("path {index}: {source}")]
    Path {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("autocovariance estimation requires stationary initialization")]
    NotStationaryInit,

    #[error("empty sample")]
    EmptySample,

    #[error("insufficient samples: {found} < {required}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("no decay window: only {found} leading lags exceed 3 standard errors (need {required})")]
    NoDecayWindow { found: usize, required: usize },

    #[error("fitted log-autocovariance slope {slope} is not negative")]
    NonDecayingFit { slope: f64 },

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("no mixing fit available for tail completion")]
    NoMixingFit,
}

impl Error {
    /// Time of the numerical failure, looking through path tags.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            Error::NonFiniteState { time } => Some(*time),
            Error::Path { source, .. } => source.failure_time(),
            _ => None,
        }
    }

    pub fn is_numerical(&self) -> bool {
        self.failure_time().is_some()
    }
}
