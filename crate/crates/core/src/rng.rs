//! Counter-based random substreams.
//!
//! Replicate `i` of a run seeded with `seed` draws from ChaCha20 keyed by
//! `seed` on stream `i`. Nested indices (simulation `j`, then replicate `i`)
//! first mix `j` into a fresh key with [`derive_seed`]. The stream a unit of
//! work sees therefore depends only on its indices, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream reserved for dataset generation inside a simulation.
pub const DATA_STREAM: u64 = u64::MAX;

pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for index `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}
