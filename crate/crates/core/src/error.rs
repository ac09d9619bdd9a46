use thiserror::Error;

/// Errors produced by grid construction, field operations, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite values in input to `{0}`")]
    NonFinite(&'static str),

    #[error("density has negative values ({count} points, min {min:.3e})")]
    NegativeDensity { count: usize, min: f64 },

    #[error("field has no mass to normalize")]
    ZeroMass,

    #[error("density not normalized: integral = {integral:.12}")]
    NotNormalized { integral: f64 },

    #[error("wavefront speed undefined: |grad S| vanishes everywhere")]
    WavefrontUndefined,

    #[error("Fisher information {value:.3e} below {min:.1e}; Fisher length undefined")]
    FisherUndefined { value: f64, min: f64 },

    #[error("all points lie below the density floor")]
    AllBelowFloor,

    #[error("node formation at t = {time:.6e} (step {step}): min P = {min_p:.3e}")]
    NodeFormation { time: f64, step: usize, min_p: f64 },

    #[error("NaN encountered at step {step}")]
    NanAbort { step: usize },

    #[error("time step violates stability bound: {0}")]
    UnstableStep(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
