//! Counter-based seeding for replica streams.
//!
//! Every replica draws from its own ChaCha8 stream whose 64-bit seed is
//! `mix64(master, index)`. `mix64` is the SplitMix64 finaliser applied to the
//! index, xor-ed into the master seed and finalised again, so a replica's
//! stream depends only on `(master, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a master seed with a stream index.
pub fn mix64(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// The RNG stream owned by replica `index` of an experiment seeded with `master`.
pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(master, index))
}

/// Standard normal deviate keyed by a tuple of integers.
///
/// Used where white noise has to be addressable by position rather than
/// drawn sequentially.
pub fn keyed_normal(key: &[u64]) -> f64 {
    let mut h = 0x2545_F491_4F6C_DD1D_u64;
    for &k in key {
        h = splitmix64(h ^ k);
    }
    let a = splitmix64(h ^ 0xA5A5_A5A5_A5A5_A5A5);
    let b = splitmix64(a);
    // (0, 1] and [0, 1)
    let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
