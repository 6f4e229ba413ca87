//! Seeding contract for every Monte-Carlo routine in the crate.
//!
//! A run is identified by a `seed: u64`; replicate `r` (a path, a probe, a
//! Monte-Carlo draw) uses ChaCha8 keyed by `seed` on stream `r`. Replicates
//! are therefore independent of each other and of the order in which they are
//! evaluated, so they can be computed in parallel or resumed individually
//! without changing a single bit of the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for replicate `replicate` of the run keyed by `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
