//! Error type shared across the crate.

/// Coarse classification used by callers that map failures to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad inputs: parameters, domains, data shapes.
    Validation,
    /// A numeric procedure failed to reach its target.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty data")]
    EmptyData,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("theta {theta} outside canonical domain {domain}")]
    ThetaOutsideDomain { theta: f64, domain: String },
    #[error("observation {x} outside model support")]
    OutsideSupport { x: f64 },
    #[error("value {0} is not a nonnegative integer")]
    NonIntegerData(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("tridiagonal eigensolver failed at index {index} after {iterations} iterations")]
    EigenNonConvergence { index: usize, iterations: usize },
    #[error("moment matching failed: best residual {best_residual:.3e} exceeds target {target:.3e}")]
    MomentMatchFailed { best_residual: f64, target: f64 },
    #[error("integration tolerance not met: achieved {achieved:.3e} with estimate {estimate:.6e}")]
    IntegrationFailed { achieved: f64, estimate: f64 },
    #[error("precision tau {tau} outside band [{lo:.6}, {hi:.6}]")]
    TauOutOfBand { tau: f64, lo: f64, hi: f64 },
    #[error("degenerate mixture: {0}")]
    DegenerateMixture(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EigenNonConvergence { .. }
            | Error::MomentMatchFailed { .. }
            | Error::IntegrationFailed { .. }
            | Error::DegenerateMixture(_) => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
