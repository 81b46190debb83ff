//! Seed derivation for reproducible substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream keyed by
//! a user seed plus a short tag path (base edge endpoints, trial index, ...).
//! Results therefore do not depend on iteration order or on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a tag path into a seed. Distinct tag paths give unrelated seeds.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ 0x6c69_6674_7375_6221);
    for (k, &t) in tags.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(k as u64).wrapping_mul(0xa076_1d64_78bd_642f)));
    }
    h
}

/// Independent generator for the substream `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, tags))
}

/// Domain tags so that different operations never share a stream.
pub(crate) mod tag {
    pub const LIFT_EDGE: u64 = 1;
    pub const JOINED: u64 = 2;
    pub const EXPANSION: u64 = 3;
    pub const AVOIDANCE: u64 = 4;
    pub const EXTENDABLE: u64 = 5;
    pub const RETRY: u64 = 6;
    pub const BRANCH_CHOICE: u64 = 7;
    pub const PROPERTY_P: u64 = 8;
    pub const SWEEP: u64 = 9;
}
