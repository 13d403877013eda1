//! Deterministic derivation of independent random streams.
//!
//! Every random draw in the crate comes from a stream keyed by
//! `(master_seed, label, indices)`. The key is hashed with SHA-256 and the
//! digest seeds a ChaCha8 generator, so a stream depends only on its key and
//! never on the order in which other streams were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedSpec {
    master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn key_digest(&self, label: &str, indices: &[u64]) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"pcs-seed-v1");
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        hasher.update((indices.len() as u64).to_le_bytes());
        for idx in indices {
            hasher.update(idx.to_le_bytes());
        }
        hasher.finalize().into()
    }

    /// 64-bit child seed for `(label, indices)`.
    pub fn child_seed(&self, label: &str, indices: &[u64]) -> u64 {
        let digest = self.key_digest(label, indices);
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    pub fn child(&self, label: &str, indices: &[u64]) -> SeedSpec {
        SeedSpec::new(self.child_seed(label, indices))
    }

    /// Random stream keyed by `(label, indices)` under this seed.
    pub fn stream(&self, label: &str, indices: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key_digest(label, indices))
    }

    /// The root stream of this seed.
    pub fn rng(&self) -> ChaCha8Rng {
        self.stream("", &[])
    }
}

impl From<u64> for SeedSpec {
    fn from(seed: u64) -> Self {
        SeedSpec::new(seed)
    }
}
