use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quantile out of domain: p = {0}")]
    QuantileOutOfDomain(f64),

    #[error("degenerate channel: pe = {0} (must lie in [0, 0.5))")]
    DegenerateChannel(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("objective evaluation failed at tau = {0}")]
    ObjectiveEvaluation(f64),

    #[error("uninformative scenario: Fisher information at the null is zero")]
    UninformativeScenario,

    #[error("requires zero thresholds: sensor {0} has tau != 0")]
    RequiresZeroThresholds(usize),

    #[error("ML did not converge (best iterate theta = {best})")]
    MlNotConverged { best: f64 },

    #[error("scenario is not homogeneous")]
    NotHomogeneous,

    #[error("benchmark defined for Laplace only")]
    LaplaceOnly,

    #[error("SNR undefined for Cauchy")]
    SnrUndefinedForCauchy,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
