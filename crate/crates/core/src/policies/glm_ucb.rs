use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{check_dim, Policy, PolicyError, Width};
use crate::round::{argmax, Round};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmUcbConfig {
    pub dim: usize,
    pub lambda: f64,
    /// Radius of the parameter ball the fit is projected onto.
    pub param_bound: f64,
    pub width: Width,
    pub max_newton_iters: usize,
    pub grad_tol: f64,
}

impl GlmUcbConfig {
    pub fn new(dim: usize, lambda: f64, param_bound: f64, width: Width) -> Self {
        Self {
            dim,
            lambda,
            param_bound,
            width,
            max_newton_iters: 50,
            grad_tol: 1e-8,
        }
    }
}

/// GLM-UCB with logistic link.
///
/// After every update the penalized maximum-likelihood estimate is refit by
/// damped Newton steps (warm-started at the previous estimate) and projected
/// onto the parameter ball. The canonical GLM loss
/// `sum softplus(z) - y z` is used, so rewards outside `[0, 1]` are fine.
#[derive(Debug, Clone)]
pub struct GlmUcb {
    config: GlmUcbConfig,
    gram_inv: DMatrix<f64>,
    history: Vec<(DVector<f64>, f64)>,
    theta: DVector<f64>,
    failed_fits: usize,
}

impl GlmUcb {
    pub fn new(config: GlmUcbConfig) -> Result<Self, PolicyError> {
        if config.dim == 0 || !(config.lambda > 0.0) || !(config.param_bound > 0.0) {
            return Err(PolicyError::Config(
                "glm-ucb needs dim > 0, lambda > 0 and a positive parameter bound".into(),
            ));
        }
        let d = config.dim;
        Ok(Self {
            config,
            gram_inv: DMatrix::identity(d, d) / config.lambda,
            history: Vec::new(),
            theta: DVector::zeros(d),
            failed_fits: 0,
        })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// Number of refits that did not converge (the previous estimate was kept).
    pub fn failed_fits(&self) -> usize {
        self.failed_fits
    }

    pub fn score(&self, action: &DVector<f64>) -> f64 {
        let beta = self.config.width.value(self.config.dim, self.config.lambda, self.history.len());
        let spread = action.dot(&(&self.gram_inv * action)).max(0.0);
        sigmoid(self.theta.dot(action)) + beta * spread.sqrt()
    }

    fn loss(&self, theta: &DVector<f64>) -> f64 {
        let data: f64 = self
            .history
            .iter()
            .map(|(a, y)| {
                let z = theta.dot(a);
                softplus(z) - y * z
            })
            .sum();
        data + 0.5 * self.config.lambda * theta.norm_squared()
    }

    /// Penalized MLE by damped Newton from `start`, then projection.
    pub fn fit(&self, start: &DVector<f64>) -> Result<DVector<f64>, PolicyError> {
        let d = self.config.dim;
        let lambda = self.config.lambda;
        let mut theta = start.clone();
        let mut converged = false;
        for _ in 0..self.config.max_newton_iters {
            let mut grad = &theta * lambda;
            let mut hess = DMatrix::identity(d, d) * lambda;
            for (a, y) in &self.history {
                let p = sigmoid(theta.dot(a));
                grad.axpy(p - y, a, 1.0);
                hess.ger(p * (1.0 - p), a, a, 1.0);
            }
            if grad.norm() < self.config.grad_tol {
                converged = true;
                break;
            }
            let step = hess
                .cholesky()
                .ok_or_else(|| PolicyError::Numerical("glm hessian not positive definite".into()))?
                .solve(&grad);
            let decrement = grad.dot(&step);
            if decrement < 1e-10 {
                // inside the quadratic-convergence region the loss differences
                // drown in rounding, so skip the line search
                theta -= &step;
                continue;
            }
            let base = self.loss(&theta);
            let mut t = 1.0;
            loop {
                let cand = &theta - &step * t;
                if self.loss(&cand) <= base - 0.25 * t * decrement || t < 1e-10 {
                    theta = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        if !converged {
            return Err(PolicyError::Numerical("glm newton did not converge".into()));
        }
        let norm = theta.norm();
        if norm > self.config.param_bound {
            theta *= self.config.param_bound / norm;
        }
        Ok(theta)
    }

    pub fn observe(&mut self, action: &DVector<f64>, reward: f64) -> Result<(), PolicyError> {
        check_dim(self.config.dim, action.len())?;
        let va = &self.gram_inv * action;
        let denom = 1.0 + action.dot(&va);
        self.gram_inv.ger(-1.0 / denom, &va, &va, 1.0);
        self.history.push((action.clone(), reward));
        match self.fit(&self.theta) {
            Ok(theta) => self.theta = theta,
            Err(PolicyError::Numerical(msg)) => {
                log::debug!("glm-ucb refit failed, keeping previous estimate: {msg}");
                self.failed_fits += 1;
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

impl Policy for GlmUcb {
    fn name(&self) -> &'static str {
        "glmucb"
    }

    fn reset(&mut self) {
        let d = self.config.dim;
        self.gram_inv = DMatrix::identity(d, d) / self.config.lambda;
        self.history.clear();
        self.theta = DVector::zeros(d);
        self.failed_fits = 0;
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
