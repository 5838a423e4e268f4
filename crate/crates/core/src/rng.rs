//! Deterministic RNG stream derivation.
//!
//! Every unit of parallel work (a scenario, a (scenario, method) pair, a
//! bootstrap replicate) owns a private generator whose seed is a pure
//! function of the master seed and the unit's index path. Results therefore
//! never depend on the number of worker threads or on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Concrete generator used for every stream.
pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with an index path into a 64-bit stream key.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x005E_ED0F_C1A1_4D5E);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    h
}

/// Builds the generator for `path` under `master`.
pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Draws a fresh 64-bit key from an existing generator, for callers that
/// receive an RNG handle but need to fan out into indexed sub-streams.
pub fn fork_key<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
