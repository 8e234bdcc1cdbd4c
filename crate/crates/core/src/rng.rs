//! Counter-based seeding for Monte Carlo trials.
//!
//! Every trial and link gets its own ChaCha stream whose seed is a pure
//! function of `(master_seed, sweep_index, trial_index, stream)`, so results do
//! not depend on the order trials are executed in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent random stream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TxRis = 1,
    RisRx = 2,
    TxRx = 3,
    Noise = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master_seed: u64, sweep_index: u64, trial_index: u64, stream: Stream) -> u64 {
    [sweep_index, trial_index, stream as u64]
        .into_iter()
        .fold(splitmix64(master_seed), |acc, word| splitmix64(acc ^ splitmix64(word)))
}

pub fn trial_rng(master_seed: u64, sweep_index: u64, trial_index: u64, stream: Stream) -> TrialRng {
    TrialRng::seed_from_u64(derive_seed(master_seed, sweep_index, trial_index, stream))
}
