//! Phase-space densities built from Hermite spectrograms.
//!
//! The crate represents wavefunctions by signed combinations of Hermite
//! spectrograms `μ^N`, which reproduce Weyl expectation values up to
//! `O(ε^N)` while every component stays a probability density that can be
//! sampled with Metropolis–Hastings.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix the
//! common scalar choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons also reject NaN

pub mod densities;
pub mod error;
pub mod expectation;
pub mod io;
pub mod quadrature;
pub mod real;
pub mod sampler;
pub mod specfun;
pub mod states;

pub use error::{Error, Result};
pub use real::Real;
pub use specfun::MultiIndex;

pub type State64 = states::State<f64>;
pub type PhasePoint64 = states::PhasePoint<f64>;
pub type SpectrogramEvaluator64 = densities::SpectrogramEvaluator<f64>;
pub type SampleSet64 = sampler::SampleSet<f64>;

/// IEEE binary128 scalar used by the deterministic convergence path.
#[cfg(feature = "quad")]
pub type Quad = f128::f128;
#[cfg(feature = "quad")]
pub type State128 = states::State<Quad>;
#[cfg(feature = "quad")]
pub type PhasePoint128 = states::PhasePoint<Quad>;

/// Crate version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
