//! Error type shared across the crate.

use crate::cheb::ApproxSolution;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A spectral-stability precondition failed (some |λ| ≥ 1 where a
    /// steady state is required).
    #[error("unstable mode: |lambda| = {magnitude} >= 1 (index {index})")]
    Unstable { index: usize, magnitude: f64 },

    /// Mismatched or otherwise invalid dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument is outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The exchange solver stalled before reaching its tolerance. The best
    /// iterate found so far is carried for diagnostics.
    #[error("minimax exchange did not converge after {iterations} iterations (gap {gap:.3e})")]
    ExchangeStalled {
        iterations: usize,
        gap: f64,
        best: Box<ApproxSolution>,
    },

    /// A solver ended without its convergence certificate.
    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    /// Configuration file problems (parse or validation).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
