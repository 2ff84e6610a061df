use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {value} at position {index} is outside (0, 1)")]
    ProbOutOfRange { index: usize, value: f64 },
    #[error("selection probabilities sum to {sum}, not 1")]
    ProbsDontSumToOne { sum: f64 },
    #[error("sample size {n} must satisfy 1 <= n < N = {population}")]
    SampleTooLarge { n: usize, population: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid population: {0}")]
    InvalidPopulation(&'static str),
    #[error("invalid probability vector: {0}")]
    InvalidProbs(&'static str),
    #[error("sample is empty")]
    EmptySample,
    #[error("at least 2 units are required, got {n}")]
    TooFewUnits { n: usize },
    #[error("variance estimate is zero")]
    ZeroVariance,
    #[error("degenerate bootstrap replicate")]
    DegenerateReplicate,
    #[error("bootstrap normalizer is not positive")]
    DegenerateNormalizer,
    #[error("replicate {replicate} stayed degenerate after {attempts} redraws")]
    TooManyDegenerates { replicate: u64, attempts: u32 },
    #[error("argument outside the function domain: {0}")]
    DomainError(&'static str),
    #[error("enumeration space of {size} samples exceeds the limit {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },
    #[error("first-stage sample selected no cluster")]
    EmptyFirstStage,
    #[error("PPS first stage needs at least 2 draws, got {n1}")]
    TooFewClusters { n1: usize },
}
