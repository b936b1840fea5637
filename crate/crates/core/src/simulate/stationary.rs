use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use super::sampler::CompiledModel;
use super::{require_contracting, shard_sizes, SimError};
use crate::model::{InducedModel, Orientation};
use crate::spectral::LambdaCurve;

pub const DEFAULT_THIN: usize = 16;
/// Target for `(sup_i E|M_i|^s)^N` when choosing the backward depth.
pub const TRUNCATION_TARGET: f64 = 1e-6;
const MAX_DEPTH: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    /// One forward path per shard, recorded every `thin` steps after `burn_in`.
    BurnIn {
        burn_in: usize,
        thin: usize,
        r0: f64,
    },
    /// Independent draws of the backward series truncated after `depth` terms.
    Backward { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub method: Method,
    pub seed: u64,
    pub shards: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryDraw {
    /// `X_0`, the state the sample is conditioned on.
    pub state: usize,
    pub r: f64,
    pub shard: usize,
    pub index: usize,
}

/// Backward depth `N` with `(sup_i E|M_i|^s)^N < TRUNCATION_TARGET`, `s = min(1, alpha/2)`.
///
/// If the uniform bound is not below 1 the spectral rate `exp(Lambda(s))`
/// is used instead; `alpha = None` takes `s = 1`.
pub fn default_depth(model: &InducedModel, alpha: Option<f64>) -> Result<usize, SimError> {
    require_contracting(model)?;
    let mut s = alpha.map_or(1.0, |a| (0.5 * a).min(1.0));
    if !(s > 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "alpha = {alpha:?} must be positive"
        )));
    }
    let sup = model
        .m_vector(s, Orientation::Both)
        .into_iter()
        .fold(0.0, f64::max);
    let mut rate = sup;
    if rate >= 1.0 {
        let lambda = LambdaCurve::new(model, 1e-12)?;
        rate = lambda.eval(s)?.exp();
        // Lambda is negative near 0 for a contracting model
        while rate >= 1.0 && s > 1e-6 {
            s *= 0.5;
            rate = lambda.eval(s)?.exp();
        }
        if rate >= 1.0 {
            return Err(SimError::Diverged(
                "no moment exponent with spectral rate below 1".into(),
            ));
        }
    }
    if rate == 0.0 {
        return Ok(1);
    }
    let depth = (TRUNCATION_TARGET.ln() / rate.ln()).floor() as usize + 1;
    Ok(depth.clamp(1, MAX_DEPTH))
}

/// Draws `config.count` samples of `(X_0, R)` from the stationary law.
pub fn stationary_sample(
    model: &InducedModel,
    config: &SampleConfig,
) -> Result<Vec<StationaryDraw>, SimError> {
    if config.shards == 0 {
        return Err(SimError::InvalidArgument(
            "shards must be at least 1".into(),
        ));
    }
    match config.method {
        Method::BurnIn { burn_in, thin, r0 } => {
            if burn_in == 0 || thin == 0 {
                return Err(SimError::InvalidArgument(
                    "burn_in and thin must be at least 1".into(),
                ));
            }
            if !r0.is_finite() {
                return Err(SimError::InvalidArgument(format!(
                    "r0 = {r0} is not finite"
                )));
            }
        }
        Method::Backward { depth } => {
            if depth == 0 {
                return Err(SimError::InvalidArgument("depth must be at least 1".into()));
            }
        }
    }
    require_contracting(model)?;
    let sampler = CompiledModel::new(model)?;
    let sizes = shard_sizes(config.count, config.shards);
    let parts: Result<Vec<Vec<StationaryDraw>>, SimError> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &n)| match config.method {
            Method::BurnIn { burn_in, thin, r0 } => {
                burn_in_shard(&sampler, config.seed, shard, n, burn_in, thin, r0)
            }
            Method::Backward { depth } => backward_shard(&sampler, config.seed, shard, n, depth),
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

fn burn_in_shard(
    sampler: &CompiledModel,
    seed: u64,
    shard: usize,
    n: usize,
    burn_in: usize,
    thin: usize,
    r0: f64,
) -> Result<Vec<StationaryDraw>, SimError> {
    let mut rng = stream(seed, shard as u64);
    let mut out = Vec::with_capacity(n);
    let mut x = sampler.initial(&mut rng);
    let mut r = r0;
    let mut step = 0usize;
    let mut advance = |x: &mut usize, r: &mut f64, rng: &mut _| -> Result<(), SimError> {
        *x = sampler.step_forward(*x, rng);
        let (q, m) = sampler.coefficients(*x, rng);
        *r = q + m * *r;
        step += 1;
        if r.is_finite() {
            Ok(())
        } else {
            Err(SimError::Diverged(format!(
                "R became {r} at step {step} of shard {shard}"
            )))
        }
    };
    for _ in 0..burn_in {
        advance(&mut x, &mut r, &mut rng)?;
    }
    for index in 0..n {
        for _ in 0..thin {
            advance(&mut x, &mut r, &mut rng)?;
        }
        out.push(StationaryDraw {
            state: x,
            r,
            shard,
            index,
        });
    }
    Ok(out)
}

fn backward_shard(
    sampler: &CompiledModel,
    seed: u64,
    shard: usize,
    n: usize,
    depth: usize,
) -> Result<Vec<StationaryDraw>, SimError> {
    let mut rng = stream(seed, shard as u64);
    let mut out = Vec::with_capacity(n);
    for index in 0..n {
        let x0 = sampler.initial(&mut rng);
        let mut z = x0;
        let mut r = 0.0;
        let mut prod = 1.0;
        for k in 0..depth {
            if k > 0 {
                z = sampler.step_backward(z, &mut rng);
            }
            let (q, m) = sampler.coefficients(z, &mut rng);
            r += prod * q;
            prod *= m;
        }
        if !r.is_finite() {
            return Err(SimError::Diverged(format!(
                "backward series gave {r} in shard {shard}, sample {index}"
            )));
        }
        out.push(StationaryDraw {
            state: x0,
            r,
            shard,
            index,
        });
    }
    Ok(out)
}
