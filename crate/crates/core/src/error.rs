use thiserror::Error;

/// Errors raised by the model, geometry and estimator routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("design matrix is rank deficient: condition number of AᵀA is {condition:.3e}")]
    RankDeficient { condition: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate geodesic: endpoints coincide")]
    DegenerateGeodesic,

    #[error("hyperbolic plane does not meet the half-space (R² = {r_squared:.6e})")]
    EmptyPlane { r_squared: f64 },

    #[error("curvature radius too large: fourth-order correction is {ratio:.3} of the second-order term")]
    RadiusTooLarge { ratio: f64 },

    #[error("cell {0} has no grid mass")]
    EmptyCell(usize),

    #[error("truncated domain mass {0:.3e} is negligible")]
    NegligibleMass(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
