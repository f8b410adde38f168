use thiserror::Error;

/// Errors produced by network construction, evaluation and serialization.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch at {location}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        location: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("forward trace does not match this network: {0}")]
    TraceMismatch(String),

    #[error("non-finite gradient in layer {layer}; update rejected")]
    NonFiniteGradient { layer: usize },

    #[error("checkpoint version mismatch: expected {expected}, got {got}")]
    CheckpointVersion { expected: u32, got: u32 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;
