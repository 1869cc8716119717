//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("operation requires the {required} sector but the basis is {actual}")]
    SectorMismatch {
        required: &'static str,
        actual: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("excitation number {n} exceeds cutoff {cap}")]
    ExcitationOverflow { n: usize, cap: usize },

    #[error("excitation cutoff exceeded: {0}")]
    CutoffExceeded(String),

    #[error("transformed state lost weight beyond the excitation cutoff: {0}")]
    CutoffLoss(String),

    #[error("truncated tail {tail:.3e} exceeds tolerance {tol:.3e}")]
    CutoffWarning { tail: f64, tol: f64 },

    #[error("event has zero probability on this state")]
    ZeroProbability,

    #[error("integration step too large: {0}")]
    StepTooLarge(String),

    #[error("schedule holds theta below {floor} with optical pumping enabled")]
    SingularSchedule { floor: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("stochastic run requested reproducibility but no seed was given")]
    SeedMissing,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
