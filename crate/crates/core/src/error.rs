use thiserror::Error;

/// Failures raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("modulus objective still growing at w = {w} (sup not attained in the search window)")]
    NonDecay { w: f64 },
    #[error("range error: {0}")]
    Range(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },
    #[error("degenerate curvature: g''(y_{index}) = {value}")]
    DegenerateCurvature { index: usize, value: f64 },
    #[error("vanishing curvature: apex Hessian eigenvalue {eigenvalue:e} <= {threshold:e}")]
    Curvature { eigenvalue: f64, threshold: f64 },
    #[error("gauge is not twice differentiable at the apex (finite-difference error estimate {estimate})")]
    NonSmooth { estimate: f64 },
    #[error("functional does not touch K uniquely at the apex: probe value {probe} >= {apex}")]
    NotTouching { probe: f64, apex: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("mass escapes the integration bracket: {0}")]
    MassEscape(String),
    #[error("rejection acceptance rate {rate:e} below 1e-6")]
    AcceptanceTooLow { rate: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
