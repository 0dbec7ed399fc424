//! Seeded random streams.
//!
//! Every random draw in the crate comes from [`stream`]: the master seed
//! keys a ChaCha8 generator and the replica index selects one of its 2^64
//! independent streams. Replica `r` of a run seeded with `s` therefore sees
//! the same numbers no matter how many threads execute the run or in which
//! order replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(master_seed: u64, replica: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}
