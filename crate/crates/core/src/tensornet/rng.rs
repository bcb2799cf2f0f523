use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded deterministic generator shared by initialisation, noise, dropout
/// masks and data sampling.
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent generator derived from this one's seed material and a tag.
    pub fn fork(&mut self, tag: u64) -> Self {
        let base: u64 = self.0.gen();
        Self::seed(base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn normal_vec(&mut self, n: usize, std: f64) -> Vec<f64> {
        (0..n).map(|_| std * self.normal()).collect()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.0);
    }

    /// `k` distinct indices from `0..n` (all of them, shuffled, if `k >= n`).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.0, n, k.min(n)).into_vec()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.gen()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed(9);
        let mut b = Rng::seed(9);
        assert_eq!(a.normal_vec(16, 1.0), b.normal_vec(16, 1.0));
        assert_eq!(a.sample_indices(100, 10), b.sample_indices(100, 10));
        assert_ne!(Rng::seed(1).next_u64(), Rng::seed(2).next_u64());
    }

    #[test]
    fn sample_indices_distinct() {
        let mut r = Rng::seed(3);
        let mut s = r.sample_indices(50, 50);
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_eq!(r.sample_indices(5, 10).len(), 5);
    }
}
