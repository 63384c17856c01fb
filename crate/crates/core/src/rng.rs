//! Named random streams derived from the master seed.

use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::crypto::hash_parts;

/// Independent subsystems draw from separate streams so that changing one
/// axis of a sweep does not perturb the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility,
    Workload,
    Committee,
    Network,
    Adversary,
    Keys,
}

impl Stream {
    pub fn label(self) -> &'static str {
        match self {
            Stream::Mobility => "mobility",
            Stream::Workload => "workload",
            Stream::Committee => "committee",
            Stream::Network => "network",
            Stream::Adversary => "adversary",
            Stream::Keys => "keys",
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(hash_parts(&[b"uavchain/rng/", which.label().as_bytes(), &seed.to_le_bytes()]).0)
}

/// Stable 64-bit value from the seed and a label, for key seeds and the like.
pub fn derive_u64(seed: u64, label: &str, index: u64) -> u64 {
    let d = hash_parts(&[b"uavchain/derive/", label.as_bytes(), &seed.to_le_bytes(), &index.to_le_bytes()]);
    u64::from_le_bytes(d.0[..8].try_into().unwrap())
}
