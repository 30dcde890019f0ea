//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by validation, linear algebra and the solvers.
///
/// Condition failures of a certificate are not errors: they are recorded in
/// the verdict. Only malformed inputs and numerical breakdowns end up here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two matrices that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A direct link matrix is identically zero.
    #[error("direct link H{0} is zero")]
    ZeroDirectLink(usize),

    /// A power budget is zero, negative or not finite.
    #[error("power P{0} must be positive and finite, got {1}")]
    NonpositivePower(usize, f64),

    /// A matrix that must be square is not.
    #[error("matrix must be square, got {0}x{1}")]
    NonSquare(usize, usize),

    /// A block or Schur complement in a partitioned inverse is singular.
    #[error("singular block in partitioned inverse")]
    SingularBlock,

    /// A genie covariance Sigma_i could not be inverted.
    #[error("genie covariance Sigma{0} is singular")]
    SingularSigma(usize),

    /// The middle factor of an O_i matrix is not positive definite.
    #[error("middle factor of O{0} is not positive definite")]
    SingularMiddle(usize),

    /// Genie parameters violate the validity conditions.
    #[error("invalid genie: {0}")]
    InvalidGenie(String),

    /// No positive definite Riccati solution could be produced.
    #[error("no positive definite genie covariance exists: {0}")]
    Nonexistent(String),

    /// An iterative method exhausted its budget.
    #[error("iteration did not converge: {0}")]
    DidNotConverge(String),

    /// The channel is not of the structure an operation requires.
    #[error("channel is not a Z interference channel: {0}")]
    NotAZic(String),

    /// The hypotheses of a specialised theorem do not hold.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// A rate-splitting input exceeds the power budget or is not PSD.
    #[error("infeasible rate split: {0}")]
    InfeasibleSplit(String),

    /// Reading or parsing an input document failed.
    #[error("{0}")]
    Input(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
