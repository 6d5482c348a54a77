//! Error types shared across the crate.

use thiserror::Error;

/// Errors surfaced by the numeric core.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector dimensions disagree with what the model or kernel expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Non-finite value where a finite one is required.
    #[error("non-finite input in {context}")]
    NonFinite { context: &'static str },

    /// Cholesky factorization failed even after the maximum jitter.
    #[error(
        "factorization failed for a {n}x{n} matrix even with jitter {max_jitter:e}; \
         the matrix is too ill-conditioned"
    )]
    Factorization { n: usize, max_jitter: f64 },

    /// Invalid argument outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A union-bound threshold request that the bound cannot satisfy.
    #[error("union bound is vacuous: pi_i = {pi} must exceed 2*delta = {two_delta}")]
    VacuousBound { pi: f64, two_delta: f64 },

    /// Rejection sampling exhausted its proposal budget; the target set is
    /// (numerically) empty.
    #[error("rejection sampler exceeded {cap} proposals without an accept; the set appears empty")]
    VanishingSet { cap: usize },

    /// A pool-based learner ran out of pool elements mid-run.
    #[error("candidate pool exhausted after {selected} selections")]
    PoolExhausted { selected: usize },

    /// All optimizer restarts failed.
    #[error("hyperparameter fit failed: {0}")]
    FitFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite<S: num_traits::Float>(xs: &[S], context: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}
