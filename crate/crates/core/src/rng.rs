//! Seed derivation and deterministic parallel draws.
//!
//! Work is split into fixed-size blocks and every block gets its own generator
//! derived from a base seed, so results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Number of draws handled by one derived generator.
pub const BLOCK: usize = 512;

/// A generator seeded from a single `u64`.
pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Mixes a base seed and a stream index into an independent-looking child seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Runs `draw` for indices `0..count` in parallel blocks and returns results in index order.
///
/// The block generators are derived from a seed taken from `rng`, so the output is a
/// deterministic function of the state of `rng` alone.
pub fn par_draws<R, T, F>(rng: &mut R, count: usize, draw: F) -> Vec<T>
where
    R: Rng + ?Sized,
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync,
{
    let base: u64 = rng.random();
    let blocks = count.div_ceil(BLOCK);
    let chunks: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut block_rng = rng_from_seed(derive_seed(base, b as u64));
            let start = b * BLOCK;
            let end = (start + BLOCK).min(count);
            (start..end).map(|i| draw(&mut block_rng, i)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}
