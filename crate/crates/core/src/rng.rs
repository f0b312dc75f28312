//! Seed derivation.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream identified by
//! `(seed, stream)`. Run seeds are derived from the experiment's master seed by
//! hashing the repetition index with SplitMix64, so adding a policy or a
//! duration to a sweep never shifts the randomness of any other run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 output step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the `index`-th repetition under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the simulator. Arrival streams are keyed by
/// `(device, app)` so their sequences do not depend on event ordering.
pub mod streams {
    pub const TOPOLOGY: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const TRIGGER: u64 = 3;
    /// Instruction counts of randomized message specs.
    pub const SERVICE: u64 = 4;
    const ARRIVAL_BASE: u64 = 1 << 32;

    pub fn arrival(device: usize, app: usize) -> u64 {
        ARRIVAL_BASE + ((device as u64) << 16) + app as u64
    }
}
