use rand::RngCore;

use super::{Policy, PolicyError};
use crate::round::{argmax, Round};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteUcbConfig {
    /// Discount factor in `(0, 1]`; 1 gives UCB1.
    pub discount: f64,
    /// Exploration constant `xi` in `sqrt(xi ln n / n_a)`; 2 gives UCB1.
    pub xi: f64,
}

impl Default for FiniteUcbConfig {
    fn default() -> Self {
        Self { discount: 1.0, xi: 2.0 }
    }
}

/// UCB1 / discounted UCB over arm ids, ignoring action features.
#[derive(Debug, Clone)]
pub struct FiniteUcb {
    config: FiniteUcbConfig,
    counts: Vec<f64>,
    sums: Vec<f64>,
    pulled: Vec<bool>,
    total: f64,
}

impl FiniteUcb {
    pub fn new(config: FiniteUcbConfig) -> Result<Self, PolicyError> {
        if !(config.discount > 0.0 && config.discount <= 1.0) || !(config.xi > 0.0) {
            return Err(PolicyError::Config(
                "finite ucb needs discount in (0, 1] and positive xi".into(),
            ));
        }
        Ok(Self {
            config,
            counts: Vec::new(),
            sums: Vec::new(),
            pulled: Vec::new(),
            total: 0.0,
        })
    }

    /// Discounted pull count of `arm`.
    pub fn count(&self, arm: usize) -> f64 {
        self.counts.get(arm).copied().unwrap_or(0.0)
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        let n = self.count(arm);
        (n > 0.0).then(|| self.sums[arm] / n)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn grow(&mut self, arm: usize) {
        if arm >= self.counts.len() {
            self.counts.resize(arm + 1, 0.0);
            self.sums.resize(arm + 1, 0.0);
            self.pulled.resize(arm + 1, false);
        }
    }

    pub fn index(&self, arm: usize) -> f64 {
        let n = self.count(arm);
        let bonus = (self.config.xi * self.total.max(1.0).ln() / n).sqrt();
        self.sums[arm] / n + bonus
    }

    pub fn observe(&mut self, arm: usize, reward: f64) {
        self.grow(arm);
        let g = self.config.discount;
        if g < 1.0 {
            self.counts.iter_mut().for_each(|c| *c *= g);
            self.sums.iter_mut().for_each(|s| *s *= g);
            self.total *= g;
        }
        self.counts[arm] += 1.0;
        self.sums[arm] += reward;
        self.pulled[arm] = true;
        self.total += 1.0;
    }
}

impl Policy for FiniteUcb {
    fn name(&self) -> &'static str {
        if self.config.discount < 1.0 {
            "ducb"
        } else {
            "ucb1"
        }
    }

    fn reset(&mut self) {
        self.counts.clear();
        self.sums.clear();
        self.pulled.clear();
        self.total = 0.0;
    }

    fn select(&mut self, round: &Round<'_>, _rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if round.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        if let Some(pos) = round
            .candidates
            .iter()
            .position(|&a| !self.pulled.get(a).copied().unwrap_or(false))
        {
            return Ok(pos);
        }
        Ok(argmax(round.candidates.iter().map(|&a| self.index(a))).unwrap())
    }

    fn update(&mut self, _round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError> {
        self.observe(action, reward);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn round_over<'a>(ids: &'a [usize], feats: &'a [DVector<f64>]) -> Round<'a> {
        Round::new(1, ids, feats)
    }

    #[test]
    fn unexplored_first() {
        let mut p = FiniteUcb::new(FiniteUcbConfig::default()).unwrap();
        let feats = vec![DVector::zeros(1); 3];
        let ids = [0, 1, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.select(&round_over(&ids, &feats), &mut rng).unwrap(), 0);
        p.observe(0, 0.0);
        assert_eq!(p.select(&round_over(&ids, &feats), &mut rng).unwrap(), 1);
    }

    #[test]
    fn dominated_arm_loses() {
        let mut p = FiniteUcb::new(FiniteUcbConfig::default()).unwrap();
        for _ in 0..100 {
            p.observe(0, 1.0);
            p.observe(1, 0.0);
        }
        let feats = vec![DVector::zeros(1); 2];
        let ids = [0, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(p.select(&round_over(&ids, &feats), &mut rng).unwrap(), 0);
        // UCB1 index by hand
        assert_abs_diff_eq!(p.index(1), (2.0 * 200f64.ln() / 100.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn discounted_counts_match_reweighted_log() {
        let gamma = 0.97;
        let mut p = FiniteUcb::new(FiniteUcbConfig { discount: gamma, xi: 0.6 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut log = Vec::new();
        for _ in 0..300 {
            let arm = rng.random_range(0..4);
            let r: f64 = rng.random();
            p.observe(arm, r);
            log.push((arm, r));
        }
        let t = log.len();
        for arm in 0..4 {
            let (mut n, mut s) = (0.0, 0.0);
            for (step, &(a, r)) in log.iter().enumerate() {
                if a == arm {
                    let w = gamma.powi((t - 1 - step) as i32);
                    n += w;
                    s += w * r;
                }
            }
            assert_abs_diff_eq!(p.count(arm), n, epsilon = 1e-9);
            assert_abs_diff_eq!(p.mean(arm).unwrap(), s / n, epsilon = 1e-9);
        }
    }
}
