use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Optimizer hit its iteration cap before reaching tolerance. The partial
    /// result is still usable; callers decide whether that is fatal.
    #[error("optimizer unconverged: {0}")]
    Unconverged(String),

    #[error("pipeline stage {stage} failed: {reason}")]
    StageFailure { stage: &'static str, reason: String },

    /// A transit square averaged b below the paraaccretivity floor, so the
    /// martingale decomposition is not defined.
    #[error("paraaccretivity violated on square {0}")]
    Paraaccretivity(String),

    #[error("point outside partition domain")]
    OutsidePartitionDomain,

    #[error("suppressed kernel singularity: coincident points with zero suppression")]
    KernelSingularity,

    #[error("lattice too small: {0}")]
    LatticeTooSmall(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
