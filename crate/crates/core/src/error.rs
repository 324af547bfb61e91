use thiserror::Error;

/// Errors raised by the bound, body and estimator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimensions disagree, or a matrix is not square/symmetric.
    #[error("shape error: {0}")]
    Shape(String),

    /// A matrix that must be positive definite (or invertible) is not.
    #[error("definiteness error: {0}")]
    Definiteness(String),

    /// An iterative routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A conditional Monte Carlo estimate saw too few hits to be trusted.
    #[error("insufficient hits: {hits} < {required}")]
    InsufficientHits { hits: u64, required: u64 },

    /// A ratio denominator was estimated from too little mass.
    #[error("insufficient mass: {hits} hits out of {samples} samples")]
    InsufficientMass { hits: u64, samples: u64 },

    /// A run configuration failed validation.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
