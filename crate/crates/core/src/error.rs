use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("label subset is empty; at least one label vector is required")]
    EmptySubset,

    #[error("label subset equals the full {{-1,+1}}^{n} space; a strict subset is required")]
    FullSubset { n: usize },

    #[error("label vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("enumerating {{-1,+1}}^{n} exceeds the cap of 2^{cap}; use closed forms instead")]
    EnumerationTooLarge { n: usize, cap: usize },

    #[error("tuple size {n} is invalid: {reason}")]
    InvalidTupleSize { n: usize, reason: &'static str },

    #[error("class prior {value} is outside the open interval (0, 1)")]
    InvalidPrior { value: f64 },

    #[error("mixture is singular ({detail}); the linear system cannot be inverted")]
    SingularMixture { detail: String },

    #[error("mixture rows differ by {max_dev:e}; a symmetric mixture is required")]
    AsymmetricInput { max_dev: f64 },

    #[error("operation is not defined for {kind} scenarios")]
    UnsupportedKind { kind: &'static str },

    #[error("score is not finite: {value}")]
    NonFiniteScore { value: f64 },

    #[error("{kind} loss has no usable derivative")]
    NonDifferentiableKind { kind: &'static str },

    #[error("{what} must be non-empty")]
    EmptyInput { what: &'static str },

    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },

    #[error("rejection sampler acceptance probability {z:e} is below the {min:e} guard")]
    AcceptanceTooLow { z: f64, min: f64 },

    #[error("labeled pool is missing the {class} class")]
    MissingClass { class: &'static str },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("risk became non-finite at step {step} (raw = {raw})")]
    NonFiniteRisk { step: usize, raw: f64 },

    #[error("invalid parameter: {detail}")]
    InvalidParameter { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            detail: detail.into(),
        }
    }
}
