//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and a stream index (a Fourier mode, a path number, ...). Work
//! split across threads therefore sees the same numbers regardless of the
//! schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
