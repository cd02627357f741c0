use thiserror::Error;

/// Errors produced by the analysis, simulation and market layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("uninformative signal: posterior precision {posterior} does not exceed prior precision {prior}")]
    UninformativeSignal { prior: f64, posterior: f64 },

    #[error("degenerate: signals reveal outcome exactly (|rho| = {rho})")]
    Degenerate { rho: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("boundary case: curvature {curvature:e} is indistinguishable from zero")]
    Boundary { curvature: f64 },

    #[error("discounting ineffective: {0}")]
    DiscountIneffective(String),

    #[error("time regression: counter {requested} precedes market counter {current}")]
    TimeRegression { current: u64, requested: u64 },

    #[error("inconsistent log at record {index}: {reason}")]
    Inconsistent { index: usize, reason: String },

    #[error("empty prediction sequence")]
    EmptyPredictions,

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
