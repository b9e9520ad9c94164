use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by filter design, separation and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate design: separation frequency must be positive (got {0})")]
    DegenerateDesign(f64),

    #[error("normalized separation frequency {0} rad/sample exceeds pi")]
    OutOfBand(f64),

    #[error("equiripple design did not converge after {iterations} iterations (ripple {ripple:e}, relative spread {spread:e})")]
    DesignFailure {
        iterations: usize,
        ripple: f64,
        spread: f64,
    },

    #[error("frequency response is singular at {omega} rad/s (|denominator| = {magnitude:e})")]
    SingularResponse { omega: f64, magnitude: f64 },

    #[error("filter state poisoned by a non-finite input; reset before stepping again")]
    Poisoned,

    #[error("unsupported reconfiguration: {0}")]
    UnsupportedReconfiguration(String),

    #[error("innovation covariance is singular (reciprocal condition {0:e})")]
    SingularInnovation(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("belief is in the wrong phase: expected {expected}, found {found}")]
    WrongPhase {
        expected: &'static str,
        found: &'static str,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DegenerateDesign(_)
                | Error::OutOfBand(_)
                | Error::DimensionMismatch(_)
                | Error::Parse { .. }
                | Error::UnsupportedReconfiguration(_)
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateDesign(_) => "degenerate-design",
            Error::OutOfBand(_) => "out-of-band",
            Error::DesignFailure { .. } => "design-failure",
            Error::SingularResponse { .. } => "singular-response",
            Error::Poisoned => "poisoned",
            Error::UnsupportedReconfiguration(_) => "unsupported-reconfiguration",
            Error::SingularInnovation(_) => "singular-innovation",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::WrongPhase { .. } => "wrong-phase",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
