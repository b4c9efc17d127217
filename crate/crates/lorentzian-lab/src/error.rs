use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("metric is not Lorentzian at node {node:?} (coordinates {coords:?})")]
    Signature { node: Vec<usize>, coords: Vec<f64> },
    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("residual target unmet: achieved {achieved:.3e}, required {required:.3e}")]
    Residual { achieved: f64, required: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("quadrature did not converge (estimate {estimate:.3e})")]
    Quadrature { estimate: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config field `{field}`: expected {expected}, got {actual}")]
    Schema {
        field: String,
        expected: String,
        actual: String,
    },
    #[error("cache entry unusable: {0}")]
    Cache(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn context(self, ctx: impl Into<String>) -> Error {
        Error::Context {
            context: ctx.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
