//! Error type shared by every module of the core crate.

use alloc::string::String;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: out-of-range parameters, malformed windows, too few samples.
    Validation,
    /// A computed quantity broke an invariant it must satisfy.
    Invariant,
    /// The working precision was not enough to finish the computation.
    Precision,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("alpha = {alpha} is only meaningful for the {expected} regime")]
    RegimeMismatch { alpha: f64, expected: &'static str },

    #[error("need at least {need} samples for alpha = {alpha}, got {have}")]
    InsufficientSamples { alpha: f64, have: usize, need: usize },

    #[error("no convergence in {what} after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("gram matrix is numerically singular: lambda_min = {lambda_min:e} at {bits} bits")]
    NearSingular { lambda_min: f64, bits: usize },

    #[error("precision exhausted at {bits} bits: {what}")]
    PrecisionExhausted { bits: usize, what: String },

    #[error("finite element eigenvalue {index} drifted by {drift:e} between refinements")]
    FemNonConvergence { index: usize, drift: f64 },

    #[error("rate gap condition violated at index {index}: gap {gap:e} < bound {bound:e}")]
    GapViolation { index: usize, gap: f64, bound: f64 },

    #[error("eigenfunction {index} has vanishing mass {mass:e} on the control window")]
    ZeroMass { index: usize, mass: f64 },

    #[error("{what}: {value:e} exceeds tolerance {tol:e}")]
    ToleranceExceeded { what: String, value: f64, tol: f64 },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain(_) | Error::InvalidConfig(_) | Error::RegimeMismatch { .. } | Error::InsufficientSamples { .. } => {
                ErrorCategory::Validation
            }
            Error::NotPositiveDefinite { .. } | Error::NearSingular { .. } | Error::PrecisionExhausted { .. } => ErrorCategory::Precision,
            Error::NonConvergence { .. }
            | Error::FemNonConvergence { .. }
            | Error::GapViolation { .. }
            | Error::ZeroMass { .. }
            | Error::ToleranceExceeded { .. } => ErrorCategory::Invariant,
        }
    }

    /// Short stable identifier, suitable for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidConfig(_) => "invalid_config",
            Error::RegimeMismatch { .. } => "regime_mismatch",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NearSingular { .. } => "near_singular",
            Error::PrecisionExhausted { .. } => "precision_exhausted",
            Error::FemNonConvergence { .. } => "fem_non_convergence",
            Error::GapViolation { .. } => "gap_violation",
            Error::ZeroMass { .. } => "zero_mass",
            Error::ToleranceExceeded { .. } => "tolerance_exceeded",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
