//! Seeded random streams.
//!
//! Every stochastic step draws from its own ChaCha8 stream so that, for
//! example, changing the batch size does not perturb weight initialisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent purposes that draw randomness from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Train = 2,
    Split = 3,
    Induce = 4,
    Donor = 5,
    Folds = 6,
}

pub fn stream(seed: u64, purpose: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
