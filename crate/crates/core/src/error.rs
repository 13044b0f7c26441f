use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes: parameter
/// and classification problems are validation failures (exit 2), I/O and
/// format problems exit 3, resolution-floor reports exit 4.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("too few usable points: have {have}, need {need}")]
    TooFewPoints { have: usize, need: usize },

    /// Every value of a net is exactly zero; callers that classify treat
    /// this as negligible, callers that fit must not silently invent a slope.
    #[error("net is identically zero")]
    IdenticallyZero,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Requested accuracy cannot be met at the configured sampling; the
    /// payload names the smallest trustworthy epsilon or grid step.
    #[error("resolution floor: {0}")]
    ResolutionFloor(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
