use thiserror::Error;

/// Errors raised by the engine. Variants map one-to-one onto the failure
/// codes exposed by the command line front end.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("refinement chain broken at tick {tick}")]
    RefinementBroken { tick: usize },
    #[error("bad probability vector: {0}")]
    BadProbability(String),
    #[error("malformed partition: {0}")]
    BadPartition(String),
    #[error("not a stopping time: {{T <= {tick}}} is not measurable")]
    NotAStoppingTime { tick: usize },
    #[error("random time takes a value outside the tick grid")]
    NotARandomTime,
    #[error("process is not adapted at tick {tick}")]
    NotAdapted { tick: usize },
    #[error("integrand is not predictable at tick {tick}")]
    NotPredictable { tick: usize },
    #[error("process is not a martingale at tick {tick}")]
    NotAMartingale { tick: usize },
    #[error("process is not an F-martingale at tick {tick}")]
    NotFMartingale { tick: usize },
    #[error("drift factors missing or do not match the basis")]
    FactorsMissing,
    #[error("drift factorization unsolvable at tick {tick}")]
    Unsolvable { tick: usize },
    #[error("invalid structure connector: {0}")]
    ConnectorInvalid(String),
    #[error("support condition fails at tick {tick}")]
    SupportConditionFailed { tick: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("event data invariant violated: {0}")]
    DataInvariantViolated(String),
    #[error("branch {branch} has zero probability under one of the two laws")]
    ZeroProbabilityBranch { branch: usize },
    #[error("bad sampling grid: {0}")]
    BadGrid(String),
    #[error("Jacod density vanishes at tick {tick}")]
    JacodDegenerate { tick: usize },
    #[error("Azema supermartingale check region is empty")]
    AzemaDegenerate,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
