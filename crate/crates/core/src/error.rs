use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The angular profile is not strictly positive or not even.
    #[error("invalid angular profile: {0}")]
    InvalidProfile(String),

    /// The periodic window cannot host the requested computation.
    #[error("grid too small: {0}")]
    GridTooSmall(String),

    /// Mass escaping the periodic window exceeds the strict-mode budget.
    #[error("aliasing guard violated: estimated wrapped mass {mass:.3e} exceeds {limit:.1e}")]
    Aliasing { mass: f64, limit: f64 },

    /// Halving the time step of the Duhamel quadrature moved the result too much.
    #[error(
        "Duhamel quadrature unresolved: relative gap {gap:.3e} at the origin (limit {limit:.1e})"
    )]
    QuadratureUnresolved { gap: f64, limit: f64 },

    /// A numerical integral failed its own convergence check.
    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    /// The tail sampler failed to accept a proposal within its iteration budget.
    #[error("tail sampler exhausted after {iterations} proposals (acceptance bound {bound:.4})")]
    SamplerExhausted { iterations: u64, bound: f64 },

    /// A level crossing or other feature was not found inside the window.
    #[error("not found: {0}")]
    NotFound(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
