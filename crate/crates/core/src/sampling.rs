//! Seeded random sampling shared by all checkers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used whenever the caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x5eed_a9a7_4501_0001;

pub type SampleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for work item `index` of a sweep seeded by
/// `seed`, so parallel sweeps draw the same numbers as sequential ones.
pub fn stream(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Uniform point in the box `[lower_i, upper_i]`.
pub fn point_in_box<R: Rng + ?Sized>(rng: &mut R, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| rng.random_range(lo..hi))
        .collect()
}

/// Uniform vector with entries in `[-amplitude, amplitude]`.
pub fn symmetric_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-amplitude..=amplitude))
        .collect()
}
