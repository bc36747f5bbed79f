use alloc::string::String;
use core::fmt;

/// Crate-wide error type.
///
/// Variants are grouped by how callers should react: `InvalidInput` and
/// `InsufficientSample` are configuration problems, `Precondition` marks a
/// violated runtime contract, and `NonConvergence`/`NoRoot` report numerical
/// failures that may go away with looser tolerances or more iterations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value is outside its documented domain.
    InvalidInput(String),
    /// A runtime precondition was violated (e.g. a guard on sample size).
    Precondition(String),
    /// An iterative method exhausted its budget before reaching tolerance.
    NonConvergence {
        what: &'static str,
        iterations: u64,
        residual: f64,
    },
    /// Root bracketing failed; no sign change on the searched interval.
    NoRoot { lo: f64, hi: f64 },
    /// A computation that needs data received too little of it.
    InsufficientSample(String),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn insufficient_sample(msg: impl Into<String>) -> Self {
        Error::InsufficientSample(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NonConvergence {
                what,
                iterations,
                residual,
            } => write!(
                f,
                "{what} did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::NoRoot { lo, hi } => {
                write!(f, "no sign change found while bracketing on ({lo}, {hi})")
            }
            Error::InsufficientSample(msg) => write!(f, "insufficient sample: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
