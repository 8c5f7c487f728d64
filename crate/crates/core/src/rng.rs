//! Seed derivation and deterministic random streams.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` seeded through
//! [`child_seed`], so parallel and serial execution consume identical
//! streams. The mixer is fixed: three rounds of the splitmix64 finalizer,
//! xoring in the stage id and item index between rounds. Changing it would
//! silently invalidate every golden output, so it is part of the model
//! format contract.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer step.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for sub-stream `(stage, index)` of a root seed.
#[inline]
pub fn child_seed(root: u64, stage: u64, index: u64) -> u64 {
    let a = splitmix64(root);
    let b = splitmix64(a ^ stage);
    splitmix64(b ^ index)
}

/// Stream for sub-task `(stage, index)` of a root seed.
pub fn child_rng(root: u64, stage: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, stage, index))
}

/// Root stream for a seed.
pub fn root_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stage identifiers used when deriving training and generation streams.
///
/// These values are recorded here rather than at call sites so that the
/// mapping is stable across refactors.
pub mod stage_ids {
    pub const CORE_TRAIN: u64 = 1;
    pub const ENHANCER_TRAIN: u64 = 2;
    pub const BOOSTER_TRAIN: u64 = 3;
    pub const GENERATE: u64 = 4;
    pub const ATTR_CLUSTER: u64 = 5;
    pub const EM_INIT: u64 = 6;
    pub const SUBSAMPLE: u64 = 7;
    pub const EVAL: u64 = 8;
}
