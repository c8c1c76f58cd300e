use thiserror::Error;

/// Errors raised by the library.
///
/// Budget exhaustion is not an error: it is reported through
/// [`RunRecord::hit_budget`](crate::ea::RunRecord::hit_budget).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A formula was asked for outside the parameter range it is valid on.
    #[error("outside the valid regime: {0}")]
    Regime(String),

    #[error("sequence is not summable: {0}")]
    NotSummable(String),

    #[error("invalid mutation probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
