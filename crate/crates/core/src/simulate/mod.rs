//! Forward paths, stationary samplers, regeneration blocks and the order-k lift.
//!
//! Every sampler takes a 64-bit seed and splits work into shards. Shard `s`
//! draws from the ChaCha8 stream `(seed, s)` and results are concatenated in
//! shard order, so output depends only on the seed and the shard count.

mod lift;
mod path;
mod regeneration;
mod rng;
mod sampler;
mod stationary;

pub use lift::{lift_order_k, LiftedModel, OrderKernel};
pub use path::{forward_path, PathSample};
pub use regeneration::{
    block_moment_check, regeneration_blocks, regeneration_trace, BlockMoment, BlockSample,
    RegenerationConfig, RegenerationTrace, DEFAULT_MAX_BLOCK_LEN,
};
pub use rng::stream;
pub use sampler::CompiledModel;
pub use stationary::{
    default_depth, stationary_sample, Method, SampleConfig, StationaryDraw, DEFAULT_THIN,
    TRUNCATION_TARGET,
};

use thiserror::Error;

use crate::model::{InducedModel, ModelError};
use crate::spectral::SpectralError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("recursion diverged: {0}")]
    Diverged(String),
    #[error("regeneration block exceeded {cap} steps")]
    BlockOverflow { cap: usize },
    #[error("kernel entry for {0} is zero; not a chain with complete connections")]
    NotCChain(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Fails unless `E_pi log|M| < 0`, the condition for the backward series to converge.
pub(crate) fn require_contracting(model: &InducedModel) -> Result<(), SimError> {
    let gamma = model.lyapunov_exponent();
    if gamma < 0.0 {
        Ok(())
    } else {
        Err(SimError::Diverged(format!(
            "Lyapunov exponent E log|M| = {gamma} is not negative"
        )))
    }
}

/// Splits `total` items into `shards` near-equal consecutive parts.
pub(crate) fn shard_sizes(total: usize, shards: usize) -> Vec<usize> {
    let base = total / shards;
    let extra = total % shards;
    (0..shards).map(|s| base + usize::from(s < extra)).collect()
}
