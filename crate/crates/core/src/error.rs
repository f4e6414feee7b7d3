use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported number of hypotheses r = {0} (expected 2 or 3)")]
    UnsupportedRank(usize),

    #[error("overlap magnitude {0} is outside [0, 1]")]
    OverlapOutOfRange(f64),

    #[error("overlap {0} does not give a positive semidefinite Gram matrix")]
    NonPhysical(String),

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("observed outcome has zero probability under every hypothesis")]
    ZeroProbabilityOutcome,

    #[error("fewer than two hypotheses remain; nothing left to discriminate")]
    ExhaustedHypotheses,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
