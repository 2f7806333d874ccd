//! Seed plumbing for reproducible, partition-independent sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every seeded draw in the crate.
pub type SimRng = ChaCha8Rng;

/// Generator for `seed`.
pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for an independent stream `stream` under `seed`.
///
/// Chunked Monte-Carlo loops give each chunk its own stream so the result
/// depends only on `(seed, chunk index)`, never on thread scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and an index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
