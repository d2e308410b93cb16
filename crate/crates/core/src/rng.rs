//! Seed derivation for reproducible parallel ensembles.
//!
//! Every replica draws from its own generator seeded by a hash of
//! `(master_seed, stream_index)`. Ensembles are therefore bit-reproducible
//! under any parallel schedule: replica `i` sees the same stream whether it
//! runs first, last or concurrently.

use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Steele, Lea, Flood 2014).
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a per-stream seed from a master seed and a stream index.
#[inline]
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(stream.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D))
}

/// Generator for stream `stream` of ensemble `master`.
#[inline]
pub fn rng_for(master: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(master, stream))
}
