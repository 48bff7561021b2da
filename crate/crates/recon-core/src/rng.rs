//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! [`Seed`] and a purpose label. ChaCha8 is a portable, fully specified
//! counter-based generator, so phantom datasets and training runs are
//! reproducible byte-for-byte from a seed on any platform. The label is
//! hashed with FNV-1a (64-bit) and used as the ChaCha stream index, which
//! gives statistically independent streams per purpose without consuming
//! state from one another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// 64-bit seed; same seed implies bit-identical random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Derive a child seed for an independent sub-task (e.g. one dataset
    /// sample). FNV-1a of the label xor'd into the seed, finalized with the
    /// SplitMix64 mixer.
    pub fn child(self, label: &str) -> Seed {
        Seed(splitmix64(self.0 ^ fnv1a64(label.as_bytes())))
    }

    pub fn child_index(self, label: &str, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ fnv1a64(label.as_bytes()) ^ splitmix64(index)))
    }
}

/// Open a named random stream for `(seed, purpose)`.
pub fn stream(seed: Seed, purpose: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(fnv1a64(purpose.as_bytes()));
    rng
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
