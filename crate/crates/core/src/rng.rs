//! Seed derivation for reproducible ensembles.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed. Seeds
//! for individual realizations are derived from the master seed with a fixed
//! SplitMix64-style mixer, so the stream used by realization `r` does not
//! depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` in experiment cell `stream`.
///
/// `run_ensemble` uses stream 0; a T-sweep uses the index of T in its list.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN));
    let b = mix64(a ^ stream.wrapping_add(1).wrapping_mul(GOLDEN));
    mix64(b ^ index.wrapping_add(1).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
