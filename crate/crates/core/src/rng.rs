//! Seed derivation for every random stream in a run.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) keyed with a
//! 32-byte seed. Keys are derived from the run seed and a tuple of integer
//! labels with SplitMix64:
//!
//! ```text
//! h = splitmix64(base)
//! for label in labels: h = splitmix64(h ^ label)
//! key[8k..8k+8] = little_endian(splitmix64(h + k))   for k = 0..4
//! ```
//!
//! Keying streams by role (shadowing, fading, decoding) and by link ids means
//! a link's draws do not depend on which other links exist or on the order in
//! which the engine touches them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_SHADOWING: u64 = 0x5348_4144;
pub const TAG_FADING: u64 = 0x4641_4445;
pub const TAG_DECODE: u64 = 0x4445_434f;
pub const TAG_CAMPAIGN: u64 = 0x4341_4d50;

/// SplitMix64 finalizer step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(base), |h, &l| splitmix64(h ^ l))
}

pub fn stream(base: u64, labels: &[u64]) -> ChaCha8Rng {
    let h = derive_seed(base, labels);
    let mut key = [0u8; 32];
    for (k, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(h.wrapping_add(k as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
