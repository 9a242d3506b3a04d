//! Counter-based keyed randomness.
//!
//! A draw is a pure function of `(seed, a, b)`, so it does not depend on the
//! order in which pairs are visited or on the thread that visits them.

use num::bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::Rational;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64 well-mixed bits keyed by `seed` and the counter pair `(a, b)`.
pub fn keyed_u64(seed: u64, a: u64, b: u64) -> u64 {
    let h = mix64(seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ a.wrapping_mul(GOLDEN).wrapping_add(1));
    mix64(h ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(2))
}

/// A uniform draw `k / 2^53` in `[0, 1)`, returned as the integer `k`.
pub fn unit_draw_53(seed: u64, a: u64, b: u64) -> u64 {
    keyed_u64(seed, a, b) >> 11
}

/// Exact test `k / 2^53 < p` for a rational `p`.
pub fn draw_below(k: u64, p: &Rational) -> bool {
    // k · den < num · 2^53
    BigInt::from(k) * p.denom() < p.numer() * (BigInt::from(1u64) << 53)
}

/// Independent stream number `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(keyed_u64(seed, stream, 0x5EED))
}
