//! Seeded random streams.
//!
//! Every stochastic routine draws from [`SimRng`], a ChaCha8 generator. Runs
//! derive one stream per trial as `seed + trial`, and Monte-Carlo batches
//! inside a trial derive further streams through [`substream`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> SimRng {
    seeded(trial_seed(seed, trial))
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed.wrapping_add(trial)
}

/// Independent stream `index` derived from `seed`, used for parallel batches.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = seeded(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
