//! Deterministic seed derivation.
//!
//! Every random draw in the crate is keyed by the experiment seed, the sample
//! index and (for tree vertices) the Ulam–Harris path of the vertex. Results
//! therefore do not depend on generation order or on the number of worker
//! threads.

use rand::rngs::SmallRng;
use rand::SeedableRng;

/// SplitMix64 finalizer applied to the pair `(a, b)`.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit fingerprint of a byte string, stable across
/// platforms and releases.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    bytes.chunks(8).fold(mix(bytes.len() as u64, 0xF1A9), |h, chunk| {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        mix(h, u64::from_le_bytes(word))
    })
}

/// Identifies one sample of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleSeed {
    pub experiment: u64,
    pub index: u64,
}

impl SampleSeed {
    pub fn new(experiment: u64, index: u64) -> Self {
        Self { experiment, index }
    }

    /// Key of the root vertex of the tree drawn for this sample.
    pub fn root_key(&self) -> u64 {
        mix(mix(self.experiment, 0x5EED), self.index)
    }

    /// Independent stream for non-tree randomness of this sample (graphs, jitter).
    pub fn stream(&self, purpose: u64) -> SmallRng {
        SmallRng::seed_from_u64(mix(self.root_key(), purpose ^ 0xA5A5_A5A5))
    }
}

/// Key of child number `child` (0-based) of the vertex with key `parent`.
pub fn child_key(parent: u64, child: u32) -> u64 {
    mix(parent, u64::from(child) + 1)
}

/// Generator used to draw the offspring of the vertex with key `key`.
pub fn vertex_rng(key: u64) -> SmallRng {
    SmallRng::seed_from_u64(key)
}
