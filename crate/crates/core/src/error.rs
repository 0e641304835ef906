use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes of the exponent, multi-index or parameter vector disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Requested derivative order exceeds the kernel cap; raise the cap.
    #[error("total derivative order {order} exceeds the configured maximum {max}")]
    Capacity { order: usize, max: usize },

    /// A physical parameter lies outside its domain.
    #[error("parameter `{name}` = {value} is outside {domain}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// One of the discriminants that appear under a square root is not positive.
    #[error("discriminant {name} = {value} is not positive")]
    Discriminant { name: &'static str, value: f64 },

    /// The heralding event has zero probability, so the conditional state does not exist.
    #[error("conditional state undefined: success probability is {p_d}")]
    UndefinedState { p_d: f64 },

    /// A quantity that must be real, non-negative or bounded came out otherwise.
    #[error("numerical consistency violated: {0}")]
    NumericalConsistency(String),

    /// Root finding did not converge.
    #[error("no convergence after {iterations} iterations (bracket [{lo}, {hi}], residual {residual})")]
    NonConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    /// The Fock truncation drops more probability than allowed.
    #[error("Fock cutoff {cutoff} too small (tail {tail:e}); need at least {required}")]
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        tail: f64,
    },

    /// A truncated channel failed its completeness check.
    #[error("truncation error: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
