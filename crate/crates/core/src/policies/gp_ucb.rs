use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::DVector;
use rand::RngCore;

use super::{Policy, PolicyError};
use crate::round::{argmax, Round};

/// Squared-exponential kernel `exp(-|x - y|^2 / (2 l^2))`.
pub fn se_kernel(x: &DVector<f64>, y: &DVector<f64>, lengthscale: f64) -> f64 {
    let sq: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    (-sq / (2.0 * lengthscale * lengthscale)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpUcbConfig {
    pub lengthscale: f64,
    /// Observation noise variance.
    pub noise_var: f64,
    /// Confidence parameter of `beta_t = 2 ln(|A| t^2 pi^2 / (6 delta))`.
    pub delta: f64,
    /// Multiplier on `sqrt(beta_t)`.
    pub width_scale: f64,
    /// Observation cap. On reaching it the oldest quarter of the history is
    /// dropped in one go, so the refactorization cost is paid once per
    /// `max_observations / 4` updates rather than on every update.
    pub max_observations: usize,
}

impl Default for GpUcbConfig {
    fn default() -> Self {
        Self {
            lengthscale: 0.2,
            noise_var: 0.01,
            delta: 0.1,
            width_scale: 1.0,
            max_observations: 2000,
        }
    }
}

const JITTERS: [f64; 4] = [0.0, 1e-8, 1e-7, 1e-6];

/// GP-UCB over a finite candidate set.
///
/// The Cholesky factor `L` of `K + noise I` grows one row per observation.
/// For each candidate seen so far the solve `v_a = L^{-1} k(X, a)` is cached
/// and extended in O(n) per observation, so selection costs O(|A| n).
#[derive(Debug, Clone)]
pub struct GpUcb {
    config: GpUcbConfig,
    inputs: VecDeque<DVector<f64>>,
    targets: VecDeque<f64>,
    // lower-triangular rows, row i has i + 1 entries
    chol: Vec<Vec<f64>>,
    // L^{-1} y
    whitened: Vec<f64>,
    cache: HashMap<usize, Vec<f64>>,
}

impl GpUcb {
    pub fn new(config: GpUcbConfig) -> Result<Self, PolicyError> {
        if !(config.lengthscale > 0.0) || !(config.noise_var > 0.0) || config.max_observations == 0 {
            return Err(PolicyError::Config(
                "gp-ucb needs positive lengthscale, noise variance and observation cap".into(),
            ));
        }
        if !(config.delta > 0.0 && config.delta < 1.0) {
            return Err(PolicyError::Config("gp-ucb delta must lie in (0, 1)".into()));
        }
        Ok(Self {
            config,
            inputs: VecDeque::new(),
            targets: VecDeque::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            cache: HashMap::new(),
        })
    }

    pub fn observations(&self) -> usize {
        self.inputs.len()
    }

    fn kernel(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        se_kernel(x, y, self.config.lengthscale)
    }

    /// Solves `L v = rhs` for the current factor.
    fn forward(&self, rhs: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(rhs.len());
        for (i, row) in self.chol.iter().enumerate() {
            let partial: f64 = row[..i].iter().zip(&v).map(|(l, x)| l * x).sum();
            v.push((rhs[i] - partial) / row[i]);
        }
        v
    }

    /// Appends one point to the factorization.
    fn extend(&mut self, x: DVector<f64>, y: f64) -> Result<(), PolicyError> {
        let cross: Vec<f64> = self.inputs.iter().map(|xi| self.kernel(xi, &x)).collect();
        let c = self.forward(&cross);
        let base = self.kernel(&x, &x) + self.config.noise_var - c.iter().map(|v| v * v).sum::<f64>();
        let mut diag = None;
        for jitter in JITTERS {
            let d2 = base + jitter;
            if d2 > 0.0 && d2.is_finite() {
                diag = Some(d2.sqrt());
                break;
            }
        }
        let diag = diag.ok_or_else(|| {
            PolicyError::Numerical("gp kernel matrix lost positive definiteness".into())
        })?;
        let w: f64 = c.iter().zip(&self.whitened).map(|(a, b)| a * b).sum();
        self.whitened.push((y - w) / diag);
        let mut row = c;
        row.push(diag);
        self.chol.push(row);
        self.inputs.push_back(x);
        self.targets.push_back(y);
        Ok(())
    }

    fn refactor(&mut self) -> Result<(), PolicyError> {
        let inputs: Vec<_> = self.inputs.drain(..).collect();
        let targets: Vec<_> = self.targets.drain(..).collect();
        self.chol.clear();
        self.whitened.clear();
        self.cache.clear();
        for (x, y) in inputs.into_iter().zip(targets) {
            self.extend(x, y)?;
        }
        Ok(())
    }

    /// Brings the cached solve for `id` up to date and returns it.
    fn solve_for(&mut self, id: usize, a: &DVector<f64>) -> &[f64] {
        let n = self.inputs.len();
        let mut v = self.cache.remove(&id).unwrap_or_default();
        while v.len() < n {
            let i = v.len();
            let row = &self.chol[i];
            let partial: f64 = row[..i].iter().zip(&v).map(|(l, x)| l * x).sum();
            v.push((self.kernel(&self.inputs[i], a) - partial) / row[i]);
        }
        self.cache.entry(id).or_insert(v)
    }

    /// Posterior mean and variance at `a` (uncached).
    pub fn posterior(&self, a: &DVector<f64>) -> (f64, f64) {
        let cross: Vec<f64> = self.inputs.iter().map(|xi| self.kernel(xi, a)).collect();
        let v = self.forward(&cross);
        let mean = v.iter().zip(&self.whitened).map(|(p, q)| p * q).sum();
        let var = self.kernel(a, a) - v.iter().map(|x| x * x).sum::<f64>();
        (mean, var.max(0.0))
    }

    pub fn beta(&self, candidates: usize) -> f64 {
        let t = (self.inputs.len() + 1) as f64;
        2.0 * (candidates as f64 * t * t * PI * PI / (6.0 * self.config.delta)).ln()
    }

    pub fn observe(&mut self, x: &DVector<f64>, y: f64) -> Result<(), PolicyError> {
        if let Some(first) = self.inputs.front() {
            if first.len() != x.len() {
                return Err(PolicyError::Dimension {
                    expected: first.len(),
                    got: x.len(),
                });
            }
        }
        if self.inputs.len() >= self.config.max_observations {
            let drop = (self.config.max_observations / 4).max(1);
            self.inputs.drain(..drop);
            self.targets.drain(..drop);
            self.refactor()?;
        }
        self.extend(x.clone(), y)
    }
}

impl Policy for GpUcb {
    fn name(&self) -> &'static str {
        "gpucb"
    }

    fn reset(&mut self) {
        self.inputs.clear();
        self.targets.clear();
        self.chol.clear();
        self.whitened.clear();
        self.cache.clear();
    }

    fn select(&mut self, round: &Round<'_>, _rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if round.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        let width = self.config.width_scale * self.beta(round.len()).max(0.0).sqrt();
        let mut scores = Vec::with_capacity(round.len());
        for pos in 0..round.len() {
            let id = round.candidates[pos];
            let a = round.candidate(pos);
            let whitened = std::mem::take(&mut self.whitened);
            let v = self.solve_for(id, a);
            let mean: f64 = v.iter().zip(&whitened).map(|(p, q)| p * q).sum();
            let var = (1.0 - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
            self.whitened = whitened;
            scores.push(mean + width * var.sqrt());
        }
        Ok(argmax(scores).unwrap())
    }

    fn update(&mut self, round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError> {
        self.observe(&round.features[action], reward)
    }
}
