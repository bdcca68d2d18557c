use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {message} (last residual {residual:e})")]
    NumericalFailure {
        message: String,
        residual: f64,
        /// Last iterate, flattened, when the failing method has one.
        iterate: Vec<f64>,
    },

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("density bound exceeded: {0}")]
    BlowUp(String),

    #[error("front geometry: {0}")]
    Geometry(String),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, residual: f64) -> Self {
        Error::NumericalFailure {
            message: message.into(),
            residual,
            iterate: Vec::new(),
        }
    }

    /// True for failures of an iterative method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
