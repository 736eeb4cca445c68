use thiserror::Error;

/// Faults of the analysis pipeline. Semantic outcomes (non-rearrangeable rows,
/// depth caps, unknown verdicts) are not errors; they are reported values.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid spec: {0}")]
    Validation(String),

    #[error("levels differ: {0} vs {1}")]
    LevelMismatch(u32, u32),

    #[error("word outside explored depth: level {0}, explored {1}")]
    DepthExceeded(u32, u32),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("neighbor set computation failed: {0}")]
    NeighborSet(String),

    #[error("component size {0} exceeds cap {1}")]
    ComponentCap(u64, u64),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("certificate does not match classification: {0}")]
    CertificateMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
