//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("minimum rate gap not reached after {rounds} resampling rounds")]
    GapResampling { rounds: usize },

    #[error("evaluation point lies {distance:e} from the pole at {pole}")]
    PoleProximity { pole: f64, distance: f64 },

    #[error("no sign change of the secular function in bracket {index}")]
    Bracket { index: usize },

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error("probability {value:e} at state {state} is negative beyond tolerance")]
    NegativeProbability { state: usize, value: f64 },

    #[error("point {re}{im:+}i lies on the excluded cut")]
    OnCut { re: f64, im: f64 },

    #[error("simulation exceeded {limit} events")]
    MaxEvents { limit: u64 },

    #[error("resolvent is singular at {re}{im:+}i")]
    SingularSolve { re: f64, im: f64 },

    #[error("partial-sum tail fraction {fraction:e} exceeds {limit:e}")]
    TruncationTail { fraction: f64, limit: f64 },

    #[error("divergent Tauberian fit: {0}")]
    DivergentFit(String),

    #[error("manifest validation failed: {0}")]
    Validation(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("malformed data: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of an iterative or quadrature scheme, as opposed to
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Bracket { .. }
                | Error::NegativeProbability { .. }
                | Error::MaxEvents { .. }
                | Error::SingularSolve { .. }
                | Error::DivergentFit(_)
                | Error::GapResampling { .. }
                | Error::PoleProximity { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn no_convergence(what: &'static str, detail: impl Into<String>) -> Self {
        Error::NonConvergence { what, detail: detail.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
