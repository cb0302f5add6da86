//! Deterministic seeding for parallel Monte Carlo trials.
//!
//! Every trial owns its own RNG, derived from `(master seed, cell id,
//! trial index)` with a SplitMix64-based mixer. The scheme is part of the
//! output contract: reruns of the same experiment spec must produce
//! bit-identical results, serial or parallel.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The simulation RNG. All engines and strategies take it explicitly.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 256-bit ChaCha seed for one trial.
///
/// Mixing scheme (stable across versions):
/// `s0 = splitmix64(master); s1 = splitmix64(s0 ^ cell_id);
/// s2 = splitmix64(s1 ^ trial_index)`, then four further SplitMix64
/// outputs from `s2` form the seed words in little-endian order.
pub fn seed_for(master: u64, cell_id: u64, trial_index: u64) -> SimRng {
    let mut s = master;
    splitmix64(&mut s);
    s ^= cell_id;
    splitmix64(&mut s);
    s ^= trial_index;
    splitmix64(&mut s);

    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
