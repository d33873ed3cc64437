use thiserror::Error;

/// Errors surfaced by the optimizer and the benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Every candidate point of a grid fell inside an excluded region.
    /// Callers treat the corresponding node as rejected.
    #[error("region fully excluded")]
    RegionFullyExcluded,

    /// The termination-time scan passed its cap; the requested gap is too
    /// small for the configured confidence widths.
    #[error("termination scan exceeded cap (gap too small for parameters)")]
    TerminationScanOverflow,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
