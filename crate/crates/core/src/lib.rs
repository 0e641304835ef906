//! Lossy conditional photon subtraction from squeezed vacuum.
//!
//! A single-mode squeezed vacuum passes through a lossy channel, a beam
//! splitter taps part of it into an ancilla mode, the ancilla suffers its own
//! loss and a photon-number-resolving detector heralds `m` photons. The
//! conditional state of the remaining mode is described in closed form through
//! derivatives of Gaussian generating functions ([`genfunc`], [`observables`]),
//! and cross-checked by a truncated Fock-space simulation ([`fock`]).

pub mod circuit;
pub mod error;
pub mod fock;
pub mod genfunc;
pub mod observables;

pub use circuit::{derived_coefficients, CircuitParams, DerivedCoefficients, Mode, TwoModeGaussianCF};
pub use error::{Error, Result};
pub use genfunc::{DerivativeKernel, ExponentFamily, MultiIndex, QuadraticExponent};
pub use observables::{
    squeezing_threshold, ConditionalState, PhotonNumberDistribution, QuadratureVariances, SqueezingThreshold,
    WignerPoint,
};

// the guide's code listings run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/genfunc.md")]
    mod genfunc {}
    #[doc = include_str!("../../../book/src/circuit.md")]
    mod circuit {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
