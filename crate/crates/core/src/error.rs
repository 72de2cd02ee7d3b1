//! Crate-wide error type.

use thiserror::Error;

/// Every failure mode of the toolkit.
///
/// Numeric routines never let a NaN or infinity escape silently: they
/// return [`Error::Overflow`] instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty coefficient window")]
    EmptyWindow,
    #[error("series is not invertible: leading coefficient below threshold")]
    NonInvertible,
    #[error("all coefficients are below the valuation threshold")]
    AllBelowThreshold,
    #[error("non-finite value produced in {0}")]
    Overflow(&'static str),
    #[error("|q| = {0} is too close to 1 (need |q| >= 1.1)")]
    QModulusTooSmall(f64),
    #[error("series did not converge: {0}")]
    NonConvergent(String),
    #[error("infinite product diverges (|p| >= 1)")]
    DivergentProduct,
    #[error("argument must be nonzero")]
    ZeroArgument,
    #[error("coefficient of degree {0} has no valuation")]
    UndefinedValuation(usize),
    #[error("slopes are not all integral")]
    NonIntegralSlopes,
    #[error("leading coefficient is not invertible")]
    NonInvertibleLeading,
    #[error("identity `{which}` violated: residual {residual:e}")]
    IdentityViolated { which: String, residual: f64 },
    #[error("gauge transform is not invertible")]
    NonInvertibleGauge,
    #[error("eigenvalue computation failed")]
    EigDecompositionFailed,
    #[error("tail term {0:e} is not negligible")]
    TailNotNegligible(f64),
    #[error("linear solve is singular: {0}")]
    LinearSolveSingular(String),
    #[error("series window ends at {have}, need at least {need}")]
    OrderTooSmall { have: i64, need: i64 },
    #[error("direction {0} is resonant: its pole class lies in the forbidden set {1}")]
    ForbiddenDirection(String, String),
    #[error("window too narrow: {0}")]
    WindowTooNarrow(String),
    #[error("series is not q-Gevrey of the requested order")]
    NotQGevrey,
    #[error("no admissible cutoff N0 found down to {0}")]
    N0TooLarge(i64),
    #[error("evaluation point lies on a pole spiral")]
    PoleHit,
    #[error("the two directions coincide in C*/q^Z")]
    DirectionsEqual,
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("point {0} outside the annulus where the sum is represented")]
    PointTooFar(String),
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error("unsupported precision `{0}` (only `double` is available)")]
    UnsupportedPrecision(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
