//! Deterministic seed derivation for parallel replicates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stochastic routine in the crate.
pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a path of indices
/// (e.g. `[stream, cell, replicate]`). Distinct paths give unrelated seeds.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
