//! Per-replicate random streams.
//!
//! Every replicate gets its own ChaCha8 stream keyed by the master seed and
//! selected by the replicate index, so results do not depend on which worker
//! runs which replicate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

pub fn replicate_rng(seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
