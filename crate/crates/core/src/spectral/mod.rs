//! Backward kernel, moment-weighted operators, the Kesten exponent, tail
//! constants and the degeneracy test.

mod constants;
mod degenerate;
mod operators;
mod perron;

pub use constants::{
    signed_constants_from, solve_signed_constants, solve_tail_constants, tail_constants_from,
    SignedConstants, TailConstants, NEGATIVE_CLAMP, NEUMANN_INCREMENT,
};
pub use degenerate::{detect_degenerate, Degeneracy};
pub use operators::{
    backward_matrix, build_operators, find_beta_max, lambda_beta, lambda_changes_sign, solve_alpha,
    solve_alpha_detailed, theta_matrix, weighted_backward, AlphaSolution, LambdaCurve, OperatorSet,
    ThetaSplit, ALPHA_GRID,
};
pub use perron::{perron_root, spectral_radius, PerronRoot, DEFAULT_MAX_ITER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix must be square and nonempty, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("matrix has a negative or non-finite entry")]
    NegativeEntry,
    #[error("power iteration did not converge after {iterations} steps; Perron root in [{lower}, {upper}]")]
    NoConvergence {
        lower: f64,
        upper: f64,
        iterations: usize,
    },
    #[error("stationary law has a zero entry")]
    DegenerateStationary,
    #[error("Lambda does not change sign: model is not in the Kesten regime")]
    NoKestenExponent,
    #[error("spectral radius of G is {rho}, not below 1")]
    NotContracting { rho: f64 },
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("multiplier takes negative values in state {0}; use the signed constants")]
    SignedMultiplier(String),
    #[error("assumption {0} fails")]
    AssumptionViolated(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    BadArgument(String),
}

/// Numerical tolerances shared by the spectral routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Width of the Collatz–Wielandt bracket for Perron roots.
    pub spectral: f64,
    /// `|Lambda(alpha)|` accepted at the root.
    pub root: f64,
    /// Sup-norm residual accepted after a linear solve.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectral: 1e-12,
            root: 1e-10,
            residual: 1e-9,
        }
    }
}
