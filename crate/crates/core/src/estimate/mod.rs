//! Empirical tails, the Hill estimator and windowed tail-constant estimates.

mod constant;
mod hill;

pub use constant::{
    k_constant_estimate, symmetry_check, tail_estimate, AlphaChoice, KConstantEstimate, KEntry,
    KHat, Symmetry, TailEstimate, Window, GRID_POINTS, MIN_EXCEEDANCES,
};
pub use hill::{default_hill_k, hill, HillEstimate, MAX_DEFAULT_K};

use thiserror::Error;

use crate::model::Sign;
use crate::simulate::StationaryDraw;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("no samples{0}")]
    NoSamples(String),
    #[error("order statistics are degenerate (tied values)")]
    DegenerateOrderStats,
    #[error("only {found} exceedances of t = {t}{which}, need {needed}")]
    ThinTail {
        found: usize,
        needed: usize,
        t: f64,
        which: String,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

/// A sample of `R` tagged with the state it is conditioned on.
pub trait TailSample {
    fn state(&self) -> usize;
    fn value(&self) -> f64;
}

impl TailSample for StationaryDraw {
    fn state(&self) -> usize {
        self.state
    }
    fn value(&self) -> f64 {
        self.r
    }
}

impl TailSample for (usize, f64) {
    fn state(&self) -> usize {
        self.0
    }
    fn value(&self) -> f64 {
        self.1
    }
}

/// Fraction of samples (optionally restricted to one state) with `eta R > t`.
pub fn empirical_tail<S: TailSample>(
    samples: &[S],
    t: f64,
    sign: Sign,
    state: Option<usize>,
) -> Result<f64, EstimateError> {
    if !(t > 0.0) {
        return Err(EstimateError::InvalidArgument(format!(
            "t = {t} must be positive"
        )));
    }
    let eta = sign.value();
    let (mut n, mut hits) = (0usize, 0usize);
    for s in samples
        .iter()
        .filter(|s| state.is_none_or(|i| s.state() == i))
    {
        n += 1;
        hits += usize::from(eta * s.value() > t);
    }
    if n == 0 {
        return Err(EstimateError::NoSamples(
            state.map_or(String::new(), |i| format!(" for state {i}")),
        ));
    }
    Ok(hits as f64 / n as f64)
}
