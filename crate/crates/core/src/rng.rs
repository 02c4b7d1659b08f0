//! The single seedable generator used by every stochastic routine.
//!
//! All runs record `(GENERATOR_ID, seed)`; rerunning with the same pair
//! reproduces the output bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Name of the pseudorandom algorithm recorded alongside every seed.
pub const GENERATOR_ID: &str = "chacha12-rand_chacha-0.9";

pub type Generator = ChaCha12Rng;

pub fn generator(seed: u64) -> Generator {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derives the seed of the `index`-th independent stream from a master seed
/// (splitmix64 finalizer), so fan-out across threads does not depend on
/// scheduling order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
