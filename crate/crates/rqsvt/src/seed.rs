//! Counter-based splitting of a master seed into independent streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn master_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the generator seeded by `master`. Streams never overlap,
/// so shot `i` sees the same draws regardless of how shots are scheduled.
pub fn child_rng(master: u64, index: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(index);
    r
}
