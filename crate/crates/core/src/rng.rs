//! Seeded, independently addressable random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream namespaces, so that profile building and simulation replications
/// sharing a seed never reuse the same random sequence.
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    Profile = 1,
    Replication = 2,
    Oracle = 3,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | index);
    rng
}

/// Exponential sample with unit mean (Rayleigh fading power gain).
#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}
