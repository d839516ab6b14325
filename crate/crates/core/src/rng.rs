//! Counter-based deterministic randomness.
//!
//! Every random quantity in the lab is a pure function of a 64-bit seed, a
//! stream id and an integer counter. There is no generator state to carry
//! around, so values at any index (including negative ones, used for the
//! two-sided shift) are available in O(1), identical across runs, and
//! independent of how work is split across workers.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a full-avalanche bijection on u64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit value at `(seed, stream, i)`.
#[inline]
pub fn bits_at(seed: u64, stream: u64, i: i64) -> u64 {
    let s = seed ^ mix64(stream.wrapping_mul(GOLDEN).wrapping_add(0xD1B5_4A32_D192_ED03));
    let z = s.wrapping_add((i as u64).wrapping_mul(GOLDEN));
    mix64(mix64(z).wrapping_add(GOLDEN))
}

/// Uniform f64 in [0, 1) with 53 random mantissa bits.
#[inline]
pub fn unit_at(seed: u64, stream: u64, i: i64) -> f64 {
    (bits_at(seed, stream, i) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derive an independent child seed, e.g. one per Monte Carlo task.
#[inline]
pub fn child_seed(seed: u64, task: u64) -> u64 {
    mix64(seed ^ mix64(task.wrapping_mul(GOLDEN)))
}
