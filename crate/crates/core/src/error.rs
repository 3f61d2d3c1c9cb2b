use thiserror::Error;

use crate::practical::LocalBasis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The open-chain mode equation only yields the complete set of real
    /// modes for `xi > N / (N + 1)`.
    #[error("unsupported regime: xi = {xi} must exceed N/(N+1) = {threshold} for N = {n}")]
    RegimeUnsupported { n: usize, xi: f64, threshold: f64 },

    #[error("root bracketing found {found} roots, expected {expected}")]
    RootCountMismatch { found: usize, expected: usize },

    #[error("gapless point: dispersion vanishes at k = {k}, xi = {xi}")]
    GaplessPoint { k: f64, xi: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e}) within {panels} panels")]
    QuadratureNotConverged { tol: f64, estimate: f64, panels: usize },

    #[error("determinant argument is negative ({value:e}); correlation matrix is not a valid state")]
    NumericallyIndefinite { value: f64 },

    #[error("matrix logarithm failed: {reason}")]
    LogBranchFailure { reason: String },

    #[error("negative radicand {value:e} in the coherence combination")]
    NegativeRadicand { value: f64 },

    #[error("empty sample: total shot count is zero")]
    EmptySample,

    #[error("optimizer budget of {budget} evaluations exhausted (best objective {objective:e})")]
    BudgetExhausted {
        budget: usize,
        objective: f64,
        best: Box<LocalBasis>,
    },

    #[error("dense system with L = {l} exceeds the limit L <= {max}")]
    TooLarge { l: usize, max: usize },

    #[error("sampled a branch with probability {probability:e}")]
    ZeroProbabilityBranch { probability: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Errors caused by the caller's parameters, as opposed to numerical
    /// breakdowns.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::RegimeUnsupported { .. }
                | Error::InvalidParameter(_)
                | Error::TooLarge { .. }
                | Error::EmptySample
                | Error::GaplessPoint { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
