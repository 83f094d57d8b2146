//! Counter-based seed derivation. Every random draw in a sweep is keyed by
//! its coordinates (master seed, realization, time step, layer, site), so
//! results do not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 output function applied to `x + γ`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed. Order-sensitive, and distinct
/// prefixes of the same words map to distinct chains.
pub fn derive_seed(words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(words.len() as u64), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Seed of one circuit realization.
pub fn realization_seed(master: u64, realization: u64) -> u64 {
    derive_seed(&[master, realization])
}

/// Seed of the gate at (time step, layer, left site) of one realization.
pub fn gate_seed(realization_seed: u64, tau: u64, layer: u64, site: u64) -> u64 {
    derive_seed(&[realization_seed, tau, layer, site])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
