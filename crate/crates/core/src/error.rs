use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("observation carries no perturbed values to quantize")]
    MissingPerturbation,

    #[error("bit budget k={k} too small for d={d}: need at least {needed} bits")]
    BudgetTooSmall { d: usize, k: usize, needed: usize },

    #[error("support has {ones} ones but the codebook admits at most {kprime}")]
    TooManyOnes { ones: usize, kprime: usize },

    #[error("rank is outside the codebook of size {size}")]
    RankOutOfRange { size: String },

    #[error("malformed message: {0}")]
    MalformedMessage(String),

    #[error("bit string has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("codec is degenerate (kprime = 0): the payload can only encode the empty set")]
    DegenerateCodec,

    #[error("no observations to estimate from")]
    EmptyInput,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid sparsifier rank: {0}")]
    BadRank(String),

    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("non-finite state at round {round}: {what}")]
    NonFiniteState { round: usize, what: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-positive value {value} in column `{column}`")]
    NonPositiveValue { column: String, value: f64 },
}
