use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{check_dim, Policy, PolicyError};
use crate::round::{argmax, Round};

/// Confidence-width schedule `beta` shared by the linear-type policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Width {
    Fixed(f64),
    /// Self-normalized ridge bound
    /// `R sqrt(2 ln(1/delta) + d ln(1 + n L^2 / (lambda d))) + sqrt(lambda) S`
    /// with `R` the noise sub-Gaussian scale, `L` the action norm bound and
    /// `S` the parameter norm bound, `n` the number of updates so far.
    SelfNormalized {
        noise_sd: f64,
        param_bound: f64,
        action_bound: f64,
        delta: f64,
    },
}

impl Width {
    pub fn value(&self, dim: usize, lambda: f64, n: usize) -> f64 {
        match *self {
            Width::Fixed(beta) => beta,
            Width::SelfNormalized {
                noise_sd,
                param_bound,
                action_bound,
                delta,
            } => {
                let d = dim as f64;
                let log_det = d * (1.0 + n as f64 * action_bound * action_bound / (lambda * d)).ln();
                noise_sd * (2.0 * (1.0 / delta).ln() + log_det).sqrt() + lambda.sqrt() * param_bound
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinUcbConfig {
    pub dim: usize,
    /// Ridge regularizer.
    pub lambda: f64,
    pub width: Width,
}

impl LinUcbConfig {
    pub fn new(dim: usize, lambda: f64, width: Width) -> Self {
        Self { dim, lambda, width }
    }
}

/// Ridge-regression UCB for linear rewards.
///
/// Keeps `V^{-1}` by Sherman-Morrison updates next to the raw Gram matrix.
#[derive(Debug, Clone)]
pub struct LinUcb {
    config: LinUcbConfig,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    moment: DVector<f64>,
    theta: DVector<f64>,
    updates: usize,
}

impl LinUcb {
    pub fn new(config: LinUcbConfig) -> Result<Self, PolicyError> {
        if config.dim == 0 {
            return Err(PolicyError::Config("linucb dimension must be positive".into()));
        }
        if !(config.lambda > 0.0) {
            return Err(PolicyError::Config("linucb lambda must be positive".into()));
        }
        let d = config.dim;
        Ok(Self {
            config,
            gram: DMatrix::identity(d, d) * config.lambda,
            gram_inv: DMatrix::identity(d, d) / config.lambda,
            moment: DVector::zeros(d),
            theta: DVector::zeros(d),
            updates: 0,
        })
    }

    pub fn config(&self) -> &LinUcbConfig {
        &self.config
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn beta(&self) -> f64 {
        self.config.width.value(self.config.dim, self.config.lambda, self.updates)
    }

    /// `<theta, a> + beta * ||a||_{V^{-1}}`.
    pub fn score(&self, action: &DVector<f64>) -> f64 {
        let spread = action.dot(&(&self.gram_inv * action)).max(0.0);
        self.theta.dot(action) + self.beta() * spread.sqrt()
    }

    pub fn observe(&mut self, action: &DVector<f64>, reward: f64) -> Result<(), PolicyError> {
        check_dim(self.config.dim, action.len())?;
        self.updates += 1;
        if action.iter().all(|&x| x == 0.0) {
            return Ok(());
        }
        self.gram.ger(1.0, action, action, 1.0);
        self.moment.axpy(reward, action, 1.0);
        let va = &self.gram_inv * action;
        let denom = 1.0 + action.dot(&va);
        self.gram_inv.ger(-1.0 / denom, &va, &va, 1.0);
        self.theta = &self.gram_inv * &self.moment;
        Ok(())
    }
}

impl Policy for LinUcb {
    fn name(&self) -> &'static str {
        "linucb"
    }

    fn reset(&mut self) {
        let d = self.config.dim;
        self.gram = DMatrix::identity(d, d) * self.config.lambda;
        self.gram_inv = DMatrix::identity(d, d) / self.config.lambda;
        self.moment = DVector::zeros(d);
        self.theta = DVector::zeros(d);
        self.updates = 0;
    }

    fn select(&mut self, round: &Round<'_>, _rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if round.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        for pos in 0..round.len() {
            check_dim(self.config.dim, round.candidate(pos).len())?;
        }
        Ok(argmax((0..round.len()).map(|pos| self.score(round.candidate(pos)))).unwrap())
    }

    fn update(&mut self, round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError> {
        self.observe(&round.features[action], reward)
    }
}
