//! Deterministic derivation of independent random streams.
//!
//! Every stochastic routine takes a master seed and derives one stream per
//! work item from `(master_seed, tag, tag, ...)`, so results never depend on
//! scheduling or thread count.

use rand::rngs::SmallRng;
use rand::SeedableRng;

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a list of tags into a master seed; each tag is mixed before folding
/// so nearby tags (cell 0, cell 1, ...) give unrelated streams.
#[inline]
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut s = mix64(seed ^ 0xA076_1D64_78BD_642F);
    for &t in tags {
        s = mix64(s ^ mix64(t ^ 0xE703_7ED1_A0B4_28DB));
    }
    s
}

/// The RNG used for path simulation.
pub type PathRng = SmallRng;

/// Stream for the given derivation chain.
#[inline]
pub fn rng_for(seed: u64, tags: &[u64]) -> PathRng {
    SmallRng::seed_from_u64(derive(seed, tags))
}

/// Domain tags keeping the per-purpose stream families disjoint.
pub mod domain {
    pub const REPLICATE: u64 = 1;
    pub const CELL: u64 = 2;
    pub const NODE: u64 = 3;
}
