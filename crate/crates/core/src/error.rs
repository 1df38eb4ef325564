use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),
    #[error("malformed probability vector: {0}")]
    MalformedVector(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("chain is not reversible")]
    NotReversible,
    #[error("alpha = {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("subset is empty")]
    EmptySubset,
    #[error("invalid subset: {0}")]
    BadSubset(String),
    #[error("matrix has a negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),
    #[error("zero denominator at index {0}")]
    ZeroDenominator(usize),
    #[error("subset has zero mass under the weighting distribution")]
    ZeroMassSubset,
    #[error("instance too large for exhaustive enumeration: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("invalid arguments: {0}")]
    BadArgs(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program solver stalled after {0} pivots")]
    SolverStall(usize),
    #[error("embedding is degenerate (all points coincide); re-seed and retry")]
    DegenerateEmbedding,
    #[error("partition certification failed: {0}")]
    CertificationFailed(String),
    #[error("weighting distribution must be positive on the subset and zero elsewhere: {0}")]
    BadNu(String),
    #[error("sample alphabet does not match reference distribution: {0}")]
    AlphabetMismatch(String),
    #[error("too few samples: have {have}, need at least {need}")]
    TooFewSamples { have: usize, need: usize },
    #[error("reference chain must be irreducible and reversible")]
    NotReversibleReference,
    #[error("trajectory state {state} outside the reference alphabet of size {d}")]
    TrajectoryAlphabetMismatch { state: usize, d: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ChainError>;
