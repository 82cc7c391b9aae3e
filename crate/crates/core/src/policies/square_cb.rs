use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use super::{sigmoid, Policy, PolicyError};
use crate::round::{argmax, Round};

/// Online regression oracle used by [`SquareCb`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SquareCbOracle {
    /// Per-action online ridge regression.
    Ridge { lambda: f64 },
    /// Per-action logistic regression, one gradient step per observation.
    Logistic { learning_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareCbConfig {
    pub oracle: SquareCbOracle,
    /// `gamma_t = gamma_scale * sqrt(|A| t)`.
    pub gamma_scale: f64,
}

impl Default for SquareCbConfig {
    fn default() -> Self {
        Self {
            oracle: SquareCbOracle::Logistic { learning_rate: 0.05 },
            gamma_scale: 1.0,
        }
    }
}

/// Inverse-gap-weighting distribution: every action other than the
/// prediction leader `b` gets `1 / (K + gamma (pred[b] - pred[a]))`, the
/// leader takes the remaining mass.
pub fn squarecb_probabilities(predictions: &[f64], gamma: f64) -> Vec<f64> {
    let k = predictions.len();
    let Some(best) = argmax(predictions.iter().copied()) else {
        return Vec::new();
    };
    let top = predictions[best];
    let mut probs: Vec<f64> = predictions
        .iter()
        .map(|&p| 1.0 / (k as f64 + gamma * (top - p)))
        .collect();
    probs[best] = 0.0;
    let rest: f64 = probs.iter().sum();
    probs[best] = (1.0 - rest).max(0.0);
    probs
}

#[derive(Debug, Clone)]
struct ArmModel {
    weights: DVector<f64>,
    // ridge only
    cov_inv: Option<DMatrix<f64>>,
    moment: Option<DVector<f64>>,
}

/// SquareCB contextual bandit with a per-action regression oracle on the
/// context features (plus an intercept).
#[derive(Debug, Clone)]
pub struct SquareCb {
    config: SquareCbConfig,
    models: HashMap<usize, ArmModel>,
    updates: usize,
}

impl SquareCb {
    pub fn new(config: SquareCbConfig) -> Result<Self, PolicyError> {
        let ok = match config.oracle {
            SquareCbOracle::Ridge { lambda } => lambda > 0.0,
            SquareCbOracle::Logistic { learning_rate } => learning_rate > 0.0,
        };
        if !ok || !(config.gamma_scale > 0.0) {
            return Err(PolicyError::Config("squarecb needs positive oracle and gamma parameters".into()));
        }
        Ok(Self {
            config,
            models: HashMap::new(),
            updates: 0,
        })
    }

    pub fn gamma(&self, actions: usize) -> f64 {
        self.config.gamma_scale * ((actions * (self.updates + 1)) as f64).sqrt()
    }

    fn features(round: &Round<'_>) -> DVector<f64> {
        match round.context {
            Some(c) => {
                let mut phi = DVector::zeros(c.len() + 1);
                phi.rows_mut(0, c.len()).copy_from(c);
                phi[c.len()] = 1.0;
                phi
            }
            None => DVector::from_element(1, 1.0),
        }
    }

    fn fresh_model(&self, dim: usize) -> ArmModel {
        match self.config.oracle {
            SquareCbOracle::Ridge { lambda } => ArmModel {
                weights: DVector::zeros(dim),
                cov_inv: Some(DMatrix::identity(dim, dim) / lambda),
                moment: Some(DVector::zeros(dim)),
            },
            SquareCbOracle::Logistic { .. } => ArmModel {
                weights: DVector::zeros(dim),
                cov_inv: None,
                moment: None,
            },
        }
    }

    fn predict(&self, action: usize, phi: &DVector<f64>) -> Result<f64, PolicyError> {
        let Some(model) = self.models.get(&action) else {
            return Ok(match self.config.oracle {
                SquareCbOracle::Ridge { .. } => 0.0,
                SquareCbOracle::Logistic { .. } => 0.5,
            });
        };
        if model.weights.len() != phi.len() {
            return Err(PolicyError::Dimension {
                expected: model.weights.len(),
                got: phi.len(),
            });
        }
        let z = model.weights.dot(phi);
        Ok(match self.config.oracle {
            SquareCbOracle::Ridge { .. } => z,
            SquareCbOracle::Logistic { .. } => sigmoid(z),
        })
    }

    pub fn probabilities(&self, round: &Round<'_>) -> Result<Vec<f64>, PolicyError> {
        let phi = Self::features(round);
        let preds = round
            .candidates
            .iter()
            .map(|&a| self.predict(a, &phi))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(squarecb_probabilities(&preds, self.gamma(round.len())))
    }
}

impl Policy for SquareCb {
    fn name(&self) -> &'static str {
        "squarecb"
    }

    fn reset(&mut self) {
        self.models.clear();
        self.updates = 0;
    }

    fn select(&mut self, round: &Round<'_>, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if round.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        let probs = self.probabilities(round)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (pos, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Ok(pos);
            }
        }
        // u landed in the rounding slack at the top
        Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
    }

    fn update(&mut self, round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError> {
        let phi = Self::features(round);
        if !self.models.contains_key(&action) {
            let fresh = self.fresh_model(phi.len());
            self.models.insert(action, fresh);
        }
        let oracle = self.config.oracle;
        let model = self.models.get_mut(&action).expect("inserted above");
        if model.weights.len() != phi.len() {
            return Err(PolicyError::Dimension {
                expected: model.weights.len(),
                got: phi.len(),
            });
        }
        match oracle {
            SquareCbOracle::Ridge { .. } => {
                let cov_inv = model.cov_inv.as_mut().expect("ridge state");
                let moment = model.moment.as_mut().expect("ridge state");
                let v = &*cov_inv * &phi;
                let denom = 1.0 + phi.dot(&v);
                cov_inv.ger(-1.0 / denom, &v, &v, 1.0);
                moment.axpy(reward, &phi, 1.0);
                model.weights = &*cov_inv * &*moment;
            }
            SquareCbOracle::Logistic { learning_rate } => {
                let err = sigmoid(model.weights.dot(&phi)) - reward;
                model.weights.axpy(-learning_rate * err, &phi, 1.0);
            }
        }
        self.updates += 1;
        Ok(())
    }
}
