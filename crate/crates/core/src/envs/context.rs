use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::round::Vector;

/// Fixed pool of unit-norm context vectors with a categorical law over them.
#[derive(Debug, Clone)]
pub struct ContextPool {
    vectors: Vec<Vector>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl ContextPool {
    /// `size` Gaussian directions, normalized, with Dirichlet(1) weights.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, dim: usize) -> Self {
        let vectors = (0..size)
            .map(|_| loop {
                let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let n = v.norm();
                if n > 0.0 {
                    break v / n;
                }
            })
            .collect();
        let weights = Self::dirichlet_weights(rng, size);
        Self::new(vectors, weights)
    }

    pub fn new(vectors: Vec<Vector>, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let sampler = WeightedIndex::new(&weights).expect("context weights must be positive");
        Self {
            vectors,
            weights,
            sampler,
        }
    }

    pub fn dirichlet_weights<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..size).map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    pub fn redraw_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let weights = Self::dirichlet_weights(rng, self.vectors.len());
        *self = Self::new(std::mem::take(&mut self.vectors), weights);
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, id: usize) -> &Vector {
        &self.vectors[id]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pool_is_normalized_and_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = ContextPool::random(&mut rng, 1000, 10);
        assert_eq!(pool.len(), 1000);
        for i in 0..pool.len() {
            assert!((pool.get(i).norm() - 1.0).abs() < 1e-12);
        }
        assert!((pool.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pool.sample(&mut rng) < 1000);
    }
}
