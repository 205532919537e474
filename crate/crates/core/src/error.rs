use thiserror::Error;

/// Errors raised by the state algebra, reconstruction and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("moments describe a pure single-state source with s² = {s_sq} ≥ 1")]
    DegenerateInput { s_sq: f64 },

    #[error("non-physical moments: C - ss has eigenvalue {value}")]
    NonPhysicalMoments { value: f64 },

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("no detection events (N = 0)")]
    EmptyData,

    #[error("count vector has {got} outcomes, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("every likelihood ratio in the prior sample underflowed to zero; increase M or reduce N")]
    DegenerateSample,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
