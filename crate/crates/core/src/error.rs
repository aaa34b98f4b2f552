use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter for {model}: {reason}")]
    InvalidParameter { model: &'static str, reason: String },

    #[error("degenerate background response: f(0) = 1")]
    DegenerateBackground,

    #[error("parameter on the support boundary cannot be transformed: {0}")]
    Boundary(String),

    #[error("invalid benchmark response {0}: must lie strictly inside (0, 1)")]
    InvalidBmr(f64),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("ingestion error at line {line}: {reason}")]
    Ingestion { line: usize, reason: String },

    #[error("optimisation failed: {0}")]
    OptimizationFailure(String),

    #[error("posterior has no support on the constrained parameter space")]
    NoSupport,

    #[error("sampler failure: {0}")]
    SamplerFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("every model failed; no posterior model weights can be formed")]
    NoModel,

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
