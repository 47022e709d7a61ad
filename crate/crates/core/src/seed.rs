//! Named, splittable seed streams.
//!
//! Every random draw in the crate comes from a [`SeedStream`] derived from a
//! single root seed by a path of names, so any stage can be replayed on its
//! own and iteration order never leaks into results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stable 64-bit hash of a string. Independent of platform and process.
pub fn stable_hash(s: &str) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(seed)
    }

    pub fn seed(&self) -> u64 {
        self.0
    }

    /// Child stream keyed by name.
    pub fn child(&self, name: &str) -> SeedStream {
        SeedStream(stable_hash(&format!("{:016x}/{}", self.0, name)))
    }

    /// Child stream keyed by an index.
    pub fn index(&self, i: u64) -> SeedStream {
        self.child(&format!("#{i}"))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
