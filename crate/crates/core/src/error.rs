use thiserror::Error;

/// Errors raised by the model, correlation and polytope routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("distribution is not normalized (sum = {0})")]
    UnnormalizedDistribution(f64),

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("basis is not orthonormal (Gram residual {0:e})")]
    NotOrthonormal(f64),

    #[error("setting index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no violation for N <= {n_max} (gap I_N - bound = {gap:e} at N = {n_max})")]
    NotFound { n_max: usize, gap: f64 },

    #[error("distribution is signaling (residual {0:e})")]
    Signaling(f64),

    #[error("instance too large: {0} deterministic strategies")]
    InstanceTooLarge(u128),

    #[error("identical measurement vectors admit no contradiction")]
    NoContradiction,

    #[error("construction failed: {0}")]
    ConstructionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
