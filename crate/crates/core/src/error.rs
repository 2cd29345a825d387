use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Density fell below the node threshold, so phase derivatives are refused.
    #[error("node at x={x}, t={t}: density {rho:e} below threshold {threshold:e}")]
    Node { x: f64, t: f64, rho: f64, threshold: f64 },

    #[error("density tabulation failed: {0}")]
    Grid(String),

    #[error("pointer coefficients underflowed to zero")]
    Degenerate,

    #[error("no counts recorded")]
    EmptyCounts,

    #[error("asymmetry {0} outside the open interval (-1, 1)")]
    Domain(f64),

    #[error("post-selected state is orthogonal to the pre-selected state")]
    OrthogonalPostselection,

    #[error("both grid cells bracketing x={x} on plane {plane} are missing")]
    Gap { plane: usize, x: f64 },

    #[error("x={x} outside grid span [{min}, {max}]")]
    OutOfRange { x: f64, min: f64, max: f64 },

    #[error("trajectory sets do not match: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
