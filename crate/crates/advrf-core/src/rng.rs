//! Seeded random number helpers.
//!
//! Every stochastic component (network init, action sampling, minibatch
//! shuffling) draws from a [`ChaCha8Rng`] so runs are reproducible from a
//! single `u64` seed.

use rand_core::{RngCore, SeedableRng};

pub use rand_chacha::ChaCha8Rng;

use crate::math;

/// Stream cipher RNG seeded from a plain integer.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`.
#[inline]
pub fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Standard normal draw (Box-Muller, cosine branch).
#[inline]
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // 1 - u lies in (0, 1], keeping the log argument positive.
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(core::f64::consts::TAU * u2)
}

/// Fisher-Yates shuffle of an index slice.
pub fn shuffle(rng: &mut ChaCha8Rng, indices: &mut [usize]) {
    let n = indices.len();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(7);
        let mut b = seeded(7);
        for _ in 0..100 {
            assert_eq!(uniform(&mut a).to_bits(), uniform(&mut b).to_bits());
        }
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = seeded(123);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let z = normal(&mut rng);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = seeded(5);
        let mut idx: alloc::vec::Vec<usize> = (0..50).collect();
        shuffle(&mut rng, &mut idx);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<alloc::vec::Vec<_>>());
    }
}
