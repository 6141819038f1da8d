use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolvent is singular: {0}")]
    SingularResolvent(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("potential transform is singular at zero momentum transfer")]
    SingularPotential,

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigenvalue within {tolerance:e} of threshold {threshold}")]
    EigenvalueAtThreshold { threshold: f64, tolerance: f64 },

    #[error("spectral gap violated: {0}")]
    GapViolation(String),

    #[error("trajectory linking is ambiguous: {0}")]
    LinkingAmbiguity(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("failed to parse density table: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence(_)
                | Error::Divergence(_)
                | Error::Eigensolver(_)
                | Error::SingularResolvent(_)
                | Error::LinkingAmbiguity(_)
                | Error::EigenvalueAtThreshold { .. }
                | Error::GapViolation(_)
                | Error::GridTooCoarse(_)
                | Error::SingularPotential
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
