//! Seed bookkeeping.
//!
//! Every stochastic operation takes an explicit `u64` seed. Independent
//! streams (one per codeword, per candidate, per sweep point) are derived
//! from a master seed with [`derive_seed`], so a run can be resumed or
//! parallelized without changing any drawn value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Creates the generator for `seed`.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `stream` from `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Derives a seed from a path of stream labels, e.g. `[point, codeword, role]`.
pub fn derive_seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &p| derive_seed(s, p))
}
