//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a base seed plus a list of
//! labels (question id, component id, tree index, ...), so results never depend
//! on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `base` with each part. Stable across platforms and releases.
pub fn derive_seed(base: u64, parts: &[&[u8]]) -> u64 {
    let mut h = splitmix64(base);
    for part in parts {
        let mut f = FNV_OFFSET;
        for b in part.iter() {
            f ^= u64::from(*b);
            f = f.wrapping_mul(FNV_PRIME);
        }
        // length separator so ["ab","c"] and ["a","bc"] differ
        f ^= part.len() as u64;
        h = splitmix64(h ^ f);
    }
    h
}

pub fn derive_index(base: u64, index: u64) -> u64 {
    derive_seed(base, &[&index.to_le_bytes()])
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
