//! Heavy-tail theory and Monte Carlo verification for the random linear
//! recursion `R_n = Q_n + M_n R_{n-1}` whose coefficients are modulated by a
//! finite hidden Markov chain.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: chains, per-state coefficient laws and the standing assumptions.
//! - [`spectral`]: backward kernel, moment-weighted operators, the Kesten
//!   exponent, tail-constant vectors and degeneracy detection.
//! - [`simulate`]: forward paths, stationary samplers, regeneration blocks and
//!   the order-k lift.
//! - [`estimate`]: empirical tails, Hill estimator and tail-constant estimates.
//! - [`report`]: the joined theory report and its JSON encoding.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimate;
pub mod json;
pub mod model;
pub mod report;
pub mod simulate;
pub mod spectral;

pub use estimate::EstimateError;
pub use model::{
    ChainSpec, CoefficientLaw, Coupling, InducedModel, MLaw, ModelError, Orientation, QLaw, Sign,
};
pub use simulate::SimError;
pub use spectral::SpectralError;
