//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 keyed by the user seed. Distinct
//! consumers use distinct ChaCha stream ids, so adding draws to one consumer
//! never shifts the numbers another one sees:
//!
//! | stream        | consumer                                    |
//! |---------------|---------------------------------------------|
//! | 0             | terminal-node counts of boosted trees       |
//! | 1             | row subsampling of boosted trees            |
//! | 16 + r        | cross-validation folds, repeat `r`          |
//! | 1024          | simulated covariates, treatment and noise   |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TERMINAL_COUNT_STREAM: u64 = 0;
pub const SUBSAMPLE_STREAM: u64 = 1;
pub const CV_STREAM_BASE: u64 = 16;
pub const SIMULATION_STREAM: u64 = 1024;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// SplitMix64 finalizer; derives child seeds such as per-replication seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
