//! Seedable, splittable random streams.
//!
//! Every stochastic routine takes `&mut R where R: Rng`. Independent chains get
//! distinct ChaCha streams derived from one seed, so `(seed, stream)` fully
//! determines a run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

/// Stream `stream` of the generator seeded by `seed`.
pub fn chain_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
