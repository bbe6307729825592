//! Error type shared by all modules.

use crate::subset::SubsetMask;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A table-backed weight scheme has no entry for the requested subset.
    #[error("no weight defined for subset {0}")]
    MissingWeight(SubsetMask),

    /// An exhaustive scan or grid would exceed the documented cost cap.
    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    /// A bound was requested for weights that verifiably violate the
    /// monotonicity condition it relies on.
    #[error("weight condition violated: counterexample u = {witness_u}, s = {witness_s}")]
    ConditionViolated {
        witness_u: SubsetMask,
        witness_s: u64,
    },

    /// The empty subset is not admissible here.
    #[error("empty subset is not admissible for this operation")]
    EmptySubset,

    /// Argument outside the principal-branch domain of the Lambert function.
    #[error("lambert_w0 requires x >= -1/e, got {0}")]
    OutOfDomain(f64),

    /// The asymptotic expression is only meaningful once A = log(1/eps)/(lambda*eta) >= e.
    #[error("asymptotic regime not entered: A = {0} < e")]
    DomainTooLarge(f64),

    /// The integrand returned a non-finite value.
    #[error("integrand evaluated to a non-finite value at {point:?}")]
    EvaluationError { point: Vec<f64> },

    /// A variance component came out more negative than quadrature noise allows.
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    /// The function has no variance, so the requested ratio is undefined.
    #[error("function is constant (zero variance)")]
    ConstantFunction,

    /// Paskov's criterion is relative to |mean|, which is zero here.
    #[error("integrand has zero mean; relative truncation criterion undefined")]
    ZeroMeanUndefined,

    /// The one-dimensional test function does not integrate to zero.
    #[error("function mean {0} is not zero (tolerance {1})")]
    MeanNotZero(f64, f64),

    /// Ratio denominators vanish for the zero function.
    #[error("function is identically zero")]
    ZeroFunction,

    /// Exact derivative evaluators were requested but the integrand has none.
    #[error("integrand provides no exact mixed partial derivatives")]
    MissingDerivatives,

    /// Malformed input (weight JSON, registry name, CLI flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
