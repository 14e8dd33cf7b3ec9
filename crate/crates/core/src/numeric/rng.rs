use num_complex::Complex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::ComplexMatrix;
use crate::scalar::Scalar;

/// Counter-based random stream. Identical seed and stream id give an
/// identical sample sequence on every platform.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream derived from this generator's seed. The
    /// parent's position is left untouched.
    pub fn child(&self, label: u64) -> Self {
        let stream = self
            .stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(label.wrapping_add(1));
        Self::with_stream(self.seed, stream)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Circularly-symmetric complex Gaussian with the given total variance.
    pub fn complex_gaussian<T: Scalar>(&mut self, variance: f64) -> Complex<T> {
        let sd = (variance / 2.0).sqrt();
        let re = self.standard_normal() * sd;
        let im = self.standard_normal() * sd;
        Complex::new(T::of(re), T::of(im))
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            idx.swap(i, j);
        }
        idx
    }
}

/// Matrix of i.i.d. `CN(0, variance)` entries.
pub fn sample_complex_gaussian<T: Scalar>(
    rng: &mut SeededRng,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<ComplexMatrix<T>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "complex Gaussian variance must be finite and non-negative, got {variance}"
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian(variance)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_gives_zeros() {
        let mut rng = SeededRng::new(1);
        let m = sample_complex_gaussian::<f64>(&mut rng, 3, 4, 0.0).unwrap();
        assert_eq!(m, ComplexMatrix::zeros(3, 4));
    }

    #[test]
    fn negative_variance_rejected() {
        let mut rng = SeededRng::new(1);
        assert!(sample_complex_gaussian::<f64>(&mut rng, 1, 1, -1.0).is_err());
        assert!(sample_complex_gaussian::<f64>(&mut rng, 1, 1, f64::NAN).is_err());
    }

    #[test]
    fn unit_variance_power() {
        let mut rng = SeededRng::new(7);
        let m = sample_complex_gaussian::<f64>(&mut rng, 1000, 100, 1.0).unwrap();
        let p = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
        assert!((0.98..=1.02).contains(&p), "empirical power {p}");
    }

    #[test]
    fn same_seed_same_stream() {
        let a = sample_complex_gaussian::<f64>(&mut SeededRng::new(42), 5, 5, 2.0).unwrap();
        let b = sample_complex_gaussian::<f64>(&mut SeededRng::new(42), 5, 5, 2.0).unwrap();
        assert_eq!(a, b);
        let c = sample_complex_gaussian::<f64>(&mut SeededRng::new(43), 5, 5, 2.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn children_are_distinct_and_reproducible() {
        let root = SeededRng::new(9);
        let mut a = root.child(1);
        let mut b = root.child(2);
        let mut a2 = root.child(1);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        let xa2: Vec<u64> = (0..4).map(|_| a2.next_u64()).collect();
        assert_ne!(xa, xb);
        assert_eq!(xa, xa2);
    }

    #[test]
    fn permutation_is_bijective() {
        let mut rng = SeededRng::new(3);
        let mut p = rng.permutation(50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }
}
