use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    BadTrace(f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("reference state is singular (min eigenvalue {0:.3e})")]
    Singular(f64),

    #[error("weight {weight} exceeds the maximal substate weight {max}")]
    WeightTooLarge { weight: f64, max: f64 },

    #[error("marginals differ (trace distance {0:.3e})")]
    MarginalMismatch(f64),

    #[error("distribution invalid: {0}")]
    BadDistribution(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("malformed protocol: {0}")]
    Malformed(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("success probability underflow (alpha = {0:.3e})")]
    AlphaUnderflow(f64),

    #[error("sampling cap of {0} draws exceeded")]
    SampleCap(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
