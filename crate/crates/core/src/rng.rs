//! Seed derivation. Every random stream in a run is a ChaCha8 generator keyed
//! by the run seed plus a path of stream identifiers, so independent parts of
//! the simulation (task arrivals, link rates, agent exploration) never share
//! draws and stay reproducible when one of them changes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags for [`derive_rng`].
pub mod stream {
    pub const NODES: u64 = 1;
    pub const ARRIVALS: u64 = 2;
    pub const LINKS: u64 = 3;
    pub const AGENT: u64 = 4;
    pub const TRAINER: u64 = 5;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds a generator from a base seed and a path of stream identifiers.
pub fn derive_rng(seed: u64, path: &[u64]) -> SimRng {
    let mut h = splitmix(seed);
    for &p in path {
        h = splitmix(h ^ splitmix(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    SimRng::seed_from_u64(h)
}
