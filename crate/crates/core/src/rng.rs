//! Seeded random streams.
//!
//! Every random draw goes through a [`ChaCha8Rng`] whose 64-bit seed is derived
//! from a root seed and a path of integer tags (for example
//! `[TAG_GRAPH, grid_point, outer, inner]`). Derivation folds each tag into
//! the state with one SplitMix64 step, so distinct paths give unrelated streams
//! and a trial's draws never depend on which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SyncRng = ChaCha8Rng;

pub const TAG_ANGLES: u64 = 1;
pub const TAG_GRAPH: u64 = 2;
pub const TAG_SOLVER: u64 = 3;
pub const TAG_NOISE: u64 = 4;
pub const TAG_GEOMETRY: u64 = 5;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the substream reached from `root` along `path`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, &tag| {
        splitmix64(
            acc.rotate_left(23)
                .wrapping_add(splitmix64(tag ^ 0xd1b5_4a32_d192_ed03)),
        )
    })
}

pub fn stream(root: u64, path: &[u64]) -> SyncRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, path))
}
