use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Seeded, counter-based random stream.
///
/// Backed by ChaCha8, whose output depends only on `(seed, stream, position)`,
/// so two runs with equal `(seed, stream)` draw identical sequences on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for `(seed, stream)`, e.g. one per run or per purpose.
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

    pub fn standard_normal(&mut self, shape: &[usize]) -> Result<Tensor> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid(format!(
                "standard_normal needs positive dimensions, got {shape:?}"
            )));
        }
        let n = shape.iter().product();
        let data = (0..n).map(|_| self.normal()).collect();
        Tensor::new(shape, data)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Draws an index with probability proportional to `weights`.
    pub fn categorical(&mut self, weights: &[f64]) -> Result<usize> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid(format!("bad categorical weights {weights:?}")));
        }
        let u = self.uniform(0.0, total);
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return Ok(i);
            }
        }
        // rounding can leave u == total; fall back to the last positive weight
        Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let a = Rng::new(17).standard_normal(&[4, 3]).unwrap();
        let b = Rng::new(17).standard_normal(&[4, 3]).unwrap();
        assert_eq!(a, b);
        let c = Rng::with_stream(17, 1).standard_normal(&[4, 3]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(Rng::new(0).standard_normal(&[0, 3]).is_err());
        assert!(Rng::new(0).standard_normal(&[]).is_err());
    }

    #[test]
    fn moments_of_ten_thousand_draws() {
        let t = Rng::new(2024).standard_normal(&[10_000]).unwrap();
        let n = t.len() as f64;
        let mean = t.data().iter().sum::<f64>() / n;
        let var = t.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((0.9..=1.1).contains(&var), "variance {var}");
    }

    #[test]
    fn categorical_respects_zero_weights() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            assert_eq!(rng.categorical(&[0.0, 1.0, 0.0]).unwrap(), 1);
        }
        assert!(rng.categorical(&[]).is_err());
        assert!(rng.categorical(&[0.0, 0.0]).is_err());
    }
}
