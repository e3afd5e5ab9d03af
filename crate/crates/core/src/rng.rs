//! Seeded random streams.
//!
//! Each training run derives independent ChaCha streams from one seed so that, for a given
//! seed, the initial weights and the minibatch order do not depend on how much noise a
//! method consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type SeededRng = ChaCha8Rng;

/// Purpose of a derived stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Shuffle = 1,
    Noise = 2,
    Eval = 3,
    Sharpness = 4,
    Spectrum = 5,
}

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, which: Stream) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

pub fn standard_normal_vec<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}
