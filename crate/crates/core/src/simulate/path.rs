use serde::Serialize;

use super::rng::stream;
use super::sampler::CompiledModel;
use super::{require_contracting, SimError};
use crate::model::InducedModel;

/// One forward trajectory of the recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    /// `X_1, ..., X_{burn_in + n}` as state indices.
    pub states: Vec<usize>,
    /// `R_{burn_in + 1}, ..., R_{burn_in + n}`.
    pub r_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub burn_in: usize,
    pub seed: u64,
}

/// Runs `R_k = Q_k + M_k R_{k-1}` from `R_0 = r0` with `X_0 ~ pi`.
pub fn forward_path(
    model: &InducedModel,
    r0: f64,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PathSample, SimError> {
    if n == 0 {
        return Err(SimError::InvalidArgument(
            "path length must be at least 1".into(),
        ));
    }
    if !r0.is_finite() {
        return Err(SimError::InvalidArgument(format!(
            "initial value {r0} is not finite"
        )));
    }
    require_contracting(model)?;
    let sampler = CompiledModel::new(model)?;
    let mut rng = stream(seed, 0);
    let total = burn_in + n;
    let mut out = PathSample {
        states: Vec::with_capacity(total),
        r_values: Vec::with_capacity(n),
        q_values: Vec::with_capacity(n),
        m_values: Vec::with_capacity(n),
        burn_in,
        seed,
    };
    let mut x = sampler.initial(&mut rng);
    let mut r = r0;
    for k in 1..=total {
        x = sampler.step_forward(x, &mut rng);
        let (q, m) = sampler.coefficients(x, &mut rng);
        r = q + m * r;
        if !r.is_finite() {
            return Err(SimError::Diverged(format!("R became {r} at step {k}")));
        }
        out.states.push(x);
        if k > burn_in {
            out.r_values.push(r);
            out.q_values.push(q);
            out.m_values.push(m);
        }
    }
    Ok(out)
}
