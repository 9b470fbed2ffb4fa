use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A parameter violates a documented invariant.
    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    /// Series summation hit its term cap before reaching the requested accuracy.
    #[error(
        "series did not converge in {op} after {terms} terms (z = {z}, residual = {residual:e})"
    )]
    SeriesNonConvergence {
        op: &'static str,
        terms: usize,
        z: f64,
        residual: f64,
    },

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge in {op}: achieved error {achieved:e} > target {target:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        op: &'static str,
        achieved: f64,
        target: f64,
        subdivisions: usize,
    },

    /// Sampling grid too coarse or too small for the requested modes.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Monte Carlo error budget not met.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }

    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeriesNonConvergence { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::InsufficientSamples(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
