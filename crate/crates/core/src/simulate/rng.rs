use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `id` of the generator keyed by `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
