//! Counter-based hashing used to derive reproducible random streams.
//!
//! Graph entries are addressed directly by `(seed, i, j)` and replicate
//! streams by `(master_seed, index)`, so results never depend on the order
//! in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const ODD_MIX: u64 = 0xD1B5_4A32_D192_ED03;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit seed from a master seed and a stream index.
#[inline]
pub fn mix(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(ODD_MIX))
}

/// Per-row key for [`entry_uniform`]; hoisted so row sweeps hash once per row.
#[inline]
pub(crate) fn row_key(seed: u64, row: usize) -> u64 {
    splitmix64(seed ^ (row as u64).wrapping_add(1).wrapping_mul(GOLDEN))
}

#[inline]
pub(crate) fn keyed_uniform(key: u64, col: usize) -> f64 {
    let h = splitmix64(key ^ (col as u64).wrapping_mul(ODD_MIX));
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Uniform in [0, 1) addressed by `(seed, i, j)`.
#[inline]
pub fn entry_uniform(seed: u64, i: usize, j: usize) -> f64 {
    keyed_uniform(row_key(seed, i), j)
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
