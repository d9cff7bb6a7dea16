use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no bracket found for root within width {width:e} of hint {hint}")]
    NoBracket { hint: f64, width: f64 },
    #[error("value {y} outside the range of the monotone map")]
    OutOfRange { y: f64 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("reference measure must be positive (coordinate {index}: {value})")]
    NonPositiveReference { index: usize, value: f64 },
    #[error("quadratic weight must be nonnegative (coordinate {index}: {value})")]
    NegativeAlpha { index: usize, value: f64 },
    #[error("inverse link requires a positive argument, got {0}")]
    NonPositiveArgument(f64),
    #[error("malformed generator at coordinate {index}: {reason}")]
    MalformedGenerator { index: usize, reason: String },
    #[error("negative input at coordinate {index}: {value}")]
    NegativeInput { index: usize, value: f64 },
    #[error("not a probability measure: {0}")]
    InvalidPm(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("empty subset")]
    EmptySubset,
    #[error("Newton iteration did not converge after {iterations} steps (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },
    #[error("direction is zero")]
    ZeroDirection,
    #[error("direction entries do not sum to zero (sum {0:e})")]
    NonKernelSum(f64),
    #[error("direction is not in the kernel space of the statistic (residual {0:e})")]
    NotInKernel(f64),
    #[error("operation requires a classical generator system")]
    NonClassicalSystem,
    #[error("kernel space is trivial")]
    TrivialKernel,
    #[error("pm lies in the closure of the family")]
    MemberOfClosure,
    #[error("necessary optimality condition violated: {0}")]
    ViolatedNecessaryCondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
