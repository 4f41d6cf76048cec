use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel l1 norm {l1_norm} is not below 1")]
    NonStationaryKernel { l1_norm: f64 },

    #[error("invalid Poisson rate {0}")]
    InvalidRate(f64),

    #[error("intensity {lambda} at step {step} exceeds cap {cap}")]
    Overflow { step: usize, lambda: f64, cap: f64 },

    #[error("lag order {p} exceeds path length minus one ({max})")]
    LagTooLarge { p: usize, max: usize },

    #[error("design matrix is singular or ill-conditioned (rcond = {rcond:e})")]
    SingularDesign { rcond: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("confidence level {0} is not in (0, 1)")]
    InvalidLevel(f64),

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("sample size {n} outside supported range [{min}, {max}]")]
    SampleSizeOutOfRange { n: usize, min: usize, max: usize },

    #[error("argument {0} outside (0, 1)")]
    DomainError(f64),

    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("malformed input at line {line}: {message}")]
    Format { line: usize, message: String },
}

impl Error {
    /// Stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonStationaryKernel { .. } => "NonStationaryKernel",
            Error::InvalidRate(_) => "InvalidRate",
            Error::Overflow { .. } => "Overflow",
            Error::LagTooLarge { .. } => "LagTooLarge",
            Error::SingularDesign { .. } => "SingularDesign",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidLevel(_) => "InvalidLevel",
            Error::ZeroVariance => "ZeroVariance",
            Error::SampleSizeOutOfRange { .. } => "SampleSizeOutOfRange",
            Error::DomainError(_) => "DomainError",
            Error::AllReplicationsFailed(_) => "AllReplicationsFailed",
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::Format { .. } => "FormatError",
        }
    }
}
