//! Deterministic per-shot random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for one shot; identical for a given (seed, index)
/// regardless of how shots are scheduled across threads.
pub fn shot_rng(master_seed: u64, shot_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot_index);
    rng
}

/// Stream reserved for a named stage of a run (offset well past shot indices).
pub fn stage_rng(master_seed: u64, stage: u64) -> ChaCha8Rng {
    shot_rng(master_seed, (1u64 << 63) | stage)
}

/// Derives a sub-seed so sweeps can give every point its own master seed.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    use rand::RngCore;
    stage_rng(master_seed, tag.wrapping_add(0x5eed)).next_u64()
}
