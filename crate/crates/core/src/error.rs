use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    Domain { what: &'static str, value: f64 },
    /// Two objects were built for different discretisations.
    ResolutionMismatch { expected: usize, found: usize },
    /// The operation is not available on this manifold.
    Unsupported(&'static str),
    /// An adaptive quadrature stopped before reaching its tolerance.
    NoConvergence { what: &'static str, estimate: f64 },
    /// The input violates a structural precondition.
    InvalidInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::ResolutionMismatch { expected, found } => {
                write!(f, "resolution mismatch: expected {expected} entries, found {found}")
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::NoConvergence { what, estimate } => {
                write!(f, "{what} did not converge (error estimate {estimate:e})")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
