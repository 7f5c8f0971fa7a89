use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max |m - m^dagger| = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("particle count {n} outside supported range 1..={cap}")]
    ParticleCount { n: usize, cap: usize },

    #[error("invalid probability {name} = {value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("priors sum to {sum}, expected 1")]
    PriorSum { sum: f64 },

    #[error("invalid POM: {reason}")]
    InvalidPom { reason: String },

    #[error("invalid cost matrix: {reason}")]
    InvalidCosts { reason: String },

    #[error("degenerate prior {xi}: decide without measurement")]
    DegeneratePrior { xi: f64 },

    #[error("detector angle undefined: the two hypotheses are indistinguishable at prior 1/2")]
    DegenerateDetector,

    #[error("outcome {outcome} has zero probability under both hypotheses")]
    ImpossibleOutcome { outcome: char },

    #[error("POM is not optimal (use expected_cost instead): {detail}")]
    NotOptimal { detail: String },

    #[error("tree depth {n} exceeds the enumeration cap {cap}")]
    TreeTooDeep { n: usize, cap: usize },

    #[error("invalid partition: {reason}")]
    InvalidPartition { reason: String },

    #[error("invalid angle {name} = {value}")]
    InvalidAngle { name: &'static str, value: f64 },

    #[error("invalid simulation config: {reason}")]
    InvalidConfig { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
