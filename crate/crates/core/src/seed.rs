//! Seed splitting.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value obtained by [`derive`]: `derive(parent, label)` mixes the
//! parent seed with a stream label through two SplitMix64 finalizers. Episode
//! `i` of an experiment with master seed `s` uses `derive(s, i)`; inside an
//! episode the context, reward-noise and consumption-noise streams use the
//! labels in [`stream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream labels used inside one episode.
pub mod stream {
    pub const CONTEXTS: u64 = 0x636f_6e74_6578_7473;
    pub const REWARD_NOISE: u64 = 0x7265_7761_7264_6e7a;
    pub const CONSUMPTION_NOISE: u64 = 0x636f_6e73_756d_706e;
    pub const POLICY: u64 = 0x706f_6c69_6379_7273;
    pub const ORACLE: u64 = 0x6f72_6163_6c65_7373;
    pub const PARAMETERS: u64 = 0x7061_7261_6d73_6565;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `label` under `parent`.
#[inline]
pub fn derive(parent: u64, label: u64) -> u64 {
    splitmix64(parent ^ splitmix64(label))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
