use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use super::sampler::CompiledModel;
use super::{shard_sizes, SimError};
use crate::model::InducedModel;

pub const DEFAULT_MAX_BLOCK_LEN: usize = 1_000_000;

/// Regeneration split of the backward chain: at each visit to `y_star` a
/// coin with success probability `r` decides whether a new block starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegenerationConfig {
    pub y_star: usize,
    pub r: f64,
    pub n_blocks: usize,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub max_block_len: usize,
    #[serde(default = "default_shards")]
    pub shards: usize,
}

fn default_cap() -> usize {
    DEFAULT_MAX_BLOCK_LEN
}

fn default_shards() -> usize {
    1
}

impl RegenerationConfig {
    pub fn new(y_star: usize, r: f64, n_blocks: usize, seed: u64) -> Self {
        Self {
            y_star,
            r,
            n_blocks,
            seed,
            max_block_len: DEFAULT_MAX_BLOCK_LEN,
            shards: 1,
        }
    }

    fn validate(&self, model: &InducedModel) -> Result<(), SimError> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(SimError::InvalidArgument(format!(
                "coin probability r = {} not in (0, 1]",
                self.r
            )));
        }
        if self.y_star >= model.len() {
            return Err(SimError::InvalidArgument(format!(
                "regeneration state {} out of range",
                self.y_star
            )));
        }
        if self.shards == 0 || self.max_block_len == 0 {
            return Err(SimError::InvalidArgument(
                "shards and max_block_len must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Aggregates of one regeneration block `N_i <= n < N_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSample {
    /// `Q_{N_i} + M_{N_i} Q_{N_i + 1} + ... `
    pub a: f64,
    /// `M_{N_i} ... M_{N_{i+1} - 1}`
    pub b: f64,
    pub length: usize,
    /// Backward-chain state at `N_i` (always `y_star`).
    pub start_state: usize,
}

/// Every block of one run, including block 0, plus the series summed directly.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationTrace {
    pub blocks: Vec<BlockSample>,
    /// `sum_n Q_n M_0 ... M_{n-1}` over all steps covered by `blocks`.
    pub direct: f64,
}

struct Walker<'a> {
    sampler: &'a CompiledModel,
    cfg: RegenerationConfig,
    rng: rand_chacha::ChaCha8Rng,
    z: usize,
}

impl Walker<'_> {
    /// Draws one block, advancing `z` to the start of the next one.
    fn block(&mut self, mut each: impl FnMut(f64, f64)) -> Result<BlockSample, SimError> {
        use rand::Rng;
        let start_state = self.z;
        let (mut a, mut b) = (0.0, 1.0);
        let mut length = 0;
        loop {
            let (q, m) = self.sampler.coefficients(self.z, &mut self.rng);
            each(q, m);
            a += b * q;
            b *= m;
            length += 1;
            self.z = self.sampler.step_backward(self.z, &mut self.rng);
            if self.z == self.cfg.y_star && self.rng.random::<f64>() < self.cfg.r {
                break;
            }
            if length >= self.cfg.max_block_len {
                return Err(SimError::BlockOverflow {
                    cap: self.cfg.max_block_len,
                });
            }
        }
        Ok(BlockSample {
            a,
            b,
            length,
            start_state,
        })
    }
}

fn walker<'a>(sampler: &'a CompiledModel, cfg: RegenerationConfig, shard: usize) -> Walker<'a> {
    Walker {
        sampler,
        cfg,
        rng: stream(cfg.seed, shard as u64),
        z: cfg.y_star,
    }
}

/// Blocks `i >= 1` of the regeneration split of the backward chain.
///
/// Each shard starts at `y_star` just after a regeneration and discards its
/// first block.
pub fn regeneration_blocks(
    model: &InducedModel,
    cfg: &RegenerationConfig,
) -> Result<Vec<BlockSample>, SimError> {
    cfg.validate(model)?;
    let sampler = CompiledModel::new(model)?;
    let parts: Result<Vec<Vec<BlockSample>>, SimError> = shard_sizes(cfg.n_blocks, cfg.shards)
        .par_iter()
        .enumerate()
        .map(|(shard, &n)| {
            let mut w = walker(&sampler, *cfg, shard);
            if n > 0 {
                w.block(|_, _| {})?;
            }
            (0..n).map(|_| w.block(|_, _| {})).collect()
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

/// Single-stream run of `n_blocks` blocks (block 0 kept) with the direct series.
pub fn regeneration_trace(
    model: &InducedModel,
    cfg: &RegenerationConfig,
) -> Result<RegenerationTrace, SimError> {
    cfg.validate(model)?;
    let sampler = CompiledModel::new(model)?;
    let mut w = walker(&sampler, *cfg, 0);
    let (mut direct, mut prod) = (0.0, 1.0);
    let mut blocks = Vec::with_capacity(cfg.n_blocks);
    for _ in 0..cfg.n_blocks {
        blocks.push(w.block(|q, m| {
            direct += prod * q;
            prod *= m;
        })?);
    }
    Ok(RegenerationTrace { blocks, direct })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockMoment {
    pub mean: f64,
    pub std_err: f64,
    pub n_blocks: usize,
}

/// Sample mean and standard error of `|b|^alpha`.
pub fn block_moment_check(blocks: &[BlockSample], alpha: f64) -> Result<BlockMoment, SimError> {
    if blocks.len() < 2 {
        return Err(SimError::InvalidArgument("need at least 2 blocks".into()));
    }
    if !(alpha >= 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "alpha = {alpha} must be >= 0"
        )));
    }
    let n = blocks.len() as f64;
    let values: Vec<f64> = blocks.iter().map(|b| b.b.abs().powf(alpha)).collect();
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BlockMoment {
        mean,
        std_err: (var / n).sqrt(),
        n_blocks: blocks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainSpec, CoefficientLaw, MLaw, QLaw};
    use crate::spectral::solve_alpha;

    fn iid(q: QLaw, m: MLaw) -> InducedModel {
        InducedModel::iid(CoefficientLaw::independent(q, m)).unwrap()
    }

    fn halving() -> InducedModel {
        iid(QLaw::Constant { value: 1.0 }, MLaw::Constant { value: 0.5 })
    }

    #[test]
    fn geometric_lengths() {
        let blocks =
            regeneration_blocks(&halving(), &RegenerationConfig::new(0, 0.5, 100_000, 3)).unwrap();
        let n = blocks.len() as f64;
        let mean = blocks.iter().map(|b| b.length as f64).sum::<f64>() / n;
        // Geometric(1/2) on {1, 2, ...}: variance (1 - r) / r^2 = 2
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n).sqrt(), "{mean}");
    }

    #[test]
    fn geometric_sums_per_block() {
        let blocks =
            regeneration_blocks(&halving(), &RegenerationConfig::new(0, 0.3, 1000, 5)).unwrap();
        for b in blocks {
            let l = b.length as i32;
            assert_eq!(b.b, 2f64.powi(-l));
            assert!((b.a - (2.0 - 2f64.powi(1 - l))).abs() < 1e-15);
        }
    }

    #[test]
    fn certain_coin_cuts_every_step() {
        let model = iid(
            QLaw::BoundedUniform { lo: 0.0, hi: 1.0 },
            MLaw::LogUniform { lo: 0.1, hi: 0.9 },
        );
        let blocks = regeneration_blocks(&model, &RegenerationConfig::new(0, 1.0, 500, 8)).unwrap();
        assert!(blocks
            .iter()
            .all(|b| b.length == 1 && b.b >= 0.1 && b.b <= 0.9));
        assert!(blocks.iter().all(|b| (0.0..=1.0).contains(&b.a)));
    }

    #[test]
    fn overflow_is_reported() {
        let mut cfg = RegenerationConfig::new(0, 1e-9, 10, 1);
        cfg.max_block_len = 100;
        assert_eq!(
            regeneration_blocks(&halving(), &cfg),
            Err(SimError::BlockOverflow { cap: 100 })
        );
    }

    #[test]
    fn moment_trivial_cases() {
        let unit = BlockSample {
            a: 0.0,
            b: 1.0,
            length: 1,
            start_state: 0,
        };
        let m = block_moment_check(&[unit, unit, unit], 1.7).unwrap();
        assert_eq!((m.mean, m.std_err), (1.0, 0.0));
        let mixed = [unit, BlockSample { b: -3.0, ..unit }];
        let m = block_moment_check(&mixed, 0.0).unwrap();
        assert_eq!((m.mean, m.std_err), (1.0, 0.0));
        assert!(block_moment_check(&[unit], 1.0).is_err());
    }

    #[test]
    fn lattice_kesten_block_moment() {
        let model = iid(
            QLaw::Constant { value: 1.0 },
            MLaw::TwoPoint {
                a: 2.0,
                p: 0.25,
                b: 0.5,
            },
        );
        let alpha = solve_alpha(&model, 4.0, 1e-12).unwrap();
        let mut cfg = RegenerationConfig::new(0, 0.8, 100_000, 21);
        cfg.shards = 4;
        let blocks = regeneration_blocks(&model, &cfg).unwrap();
        let m = block_moment_check(&blocks, alpha).unwrap();
        assert!((m.mean - 1.0).abs() < 3.0 * m.std_err, "{m:?}");
    }

    #[test]
    fn telescoping_matches_direct_series() {
        let chain = ChainSpec::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![0.2, 0.8], vec![0.6, 0.4]],
        )
        .unwrap();
        let laws = vec![
            CoefficientLaw::independent(
                QLaw::BoundedUniform { lo: -1.0, hi: 1.0 },
                MLaw::SignedLogUniform {
                    lo: 0.3,
                    hi: 1.2,
                    s: 0.5,
                },
            ),
            CoefficientLaw::independent(
                QLaw::Constant { value: 2.0 },
                MLaw::LogUniform { lo: 0.2, hi: 0.9 },
            ),
        ];
        let model = InducedModel::new(chain, laws).unwrap();
        let cfg = RegenerationConfig::new(1, 0.5, 40, 13);
        let t1 = regeneration_trace(&model, &cfg).unwrap();
        assert_eq!(t1, regeneration_trace(&model, &cfg).unwrap());
        let folded = t1
            .blocks
            .iter()
            .rev()
            .fold(0.0, |acc, blk| blk.a + blk.b * acc);
        assert!((folded - t1.direct).abs() <= 1e-12 * t1.direct.abs().max(1.0));
        assert!(t1.blocks.iter().all(|b| b.start_state == 1));
    }

    #[test]
    fn log_b_lag_one_uncorrelated() {
        let model = iid(
            QLaw::Constant { value: 1.0 },
            MLaw::SignedLogUniform {
                lo: 0.2,
                hi: 1.5,
                s: 0.5,
            },
        );
        let blocks =
            regeneration_blocks(&model, &RegenerationConfig::new(0, 0.5, 50_000, 2)).unwrap();
        let x: Vec<f64> = blocks.iter().map(|b| b.b.abs().ln()).collect();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let rho = cov / var;
        assert!(rho.abs() < 4.0 / n.sqrt(), "{rho}");
    }

    #[test]
    fn replay_and_shard_independence_of_thread_count() {
        let model = halving();
        let mut cfg = RegenerationConfig::new(0, 0.4, 1000, 99);
        cfg.shards = 3;
        let a = regeneration_blocks(&model, &cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| regeneration_blocks(&model, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
    }
}
