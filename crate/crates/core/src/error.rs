use thiserror::Error;

/// Errors raised by the numerical core.
///
/// The variants split into input validation (bad grid, bad exponent, bad
/// step size) and numerical guards (aliasing, overflow caps). The CLI maps
/// the first group to exit code 2 and the second to exit code 3.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("horizon {horizon} is not an integer multiple of step {dt}")]
    NonIntegerSteps { horizon: f64, dt: f64 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("mismatched ensemble: {0}")]
    MismatchedEnsemble(String),

    #[error("aliasing guard: {0}")]
    Aliasing(String),

    #[error("integer overflow guard: {0}")]
    Overflow(String),

    #[error("{what} = {value} exceeds the cap {cap}; {advice}")]
    AboveCap {
        what: &'static str,
        value: usize,
        cap: usize,
        advice: &'static str,
    },

    #[error("adaptedness violation: {0}")]
    NotAdapted(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for guards that fire on numerically unsafe but well-formed input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::Aliasing(_) | Error::Overflow(_) | Error::AboveCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
