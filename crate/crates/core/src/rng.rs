//! Reproducible randomness.
//!
//! Every sample gets its own ChaCha stream keyed by `(seed, index)`, so a
//! sample's randomness does not depend on which worker draws it or in what
//! order. Poisson variates use inversion for small means and `rand_distr`'s
//! rejection sampler otherwise.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

pub type SampleRng = ChaCha8Rng;

/// Generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const INVERSION_LIMIT: f64 = 10.0;

/// A Poisson variate with the given mean (`0` for nonpositive means).
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            // Guard against the cdf stalling just below u through rounding.
            if p == 0.0 {
                break;
            }
        }
        return k;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}
