//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the master seed through a
//! fixed chain of splitmix64 mixes, so adding a new consumer never shifts the
//! seeds of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` for the stream identified by `label` and `index`.
pub fn derive(parent: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(parent);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-member seeds of the bootstrap ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MemberSeeds {
    pub split: u64,
    pub init: u64,
    pub train: u64,
}

impl MemberSeeds {
    pub fn for_member(master: u64, member: usize) -> Self {
        let base = derive(master, "member", member as u64);
        Self {
            split: derive(base, "split", 0),
            init: derive(base, "init", 0),
            train: derive(base, "train", 0),
        }
    }

    pub fn meta(&self, variant: usize, meta_seed: usize) -> u64 {
        derive(derive(self.train, "meta", variant as u64), "seed", meta_seed as u64)
    }
}
