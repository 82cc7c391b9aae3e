use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::context::ContextPool;
use super::model::{make_contextual_model, make_kernel_model, make_parametric_model, sample_in_ball, RewardModel};
use super::schedule::{sample_geometric_changepoints, PsSchedule};
use super::{EnvError, Environment, RewardKind, RoundInfo};
use crate::round::Vector;

/// Reward structure of a synthetic environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Linear,
    Glm,
    Scb,
    Kernel,
    Contextual,
}

impl Variant {
    pub fn is_parametric(self) -> bool {
        matches!(self, Variant::Linear | Variant::Glm | Variant::Scb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian { var: f64 },
    /// Rewards are `Bernoulli(mean)`; means must lie in `[0, 1]`.
    BernoulliOfMean,
}

/// What happens to the reward function at a change point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeKind {
    /// Draw a fresh reward function (and, for contextual models, optionally
    /// fresh context weights).
    Resample,
    /// Negate the parameter (parametric) or the weights (kernel).
    SignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftSpec {
    /// `(1 - t/T) f_init + (t/T) f_final` on the parameters.
    LinearInterp,
    /// `theta_{t+1} = theta_t + zeta` with `zeta` uniform in the `delta`-ball,
    /// redrawn while the step would leave the parameter ball.
    RandomWalk { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Stationary,
    /// Geometric gaps with parameter `T^{-xi}`.
    Geometric { xi: f64 },
    /// Explicit change points.
    Fixed(Vec<usize>),
    Drift(DriftSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub variant: Variant,
    pub horizon: usize,
    pub dim: usize,
    pub num_actions: usize,
    /// Parameter norm `S`.
    pub param_bound: f64,
    /// Action norm bound `L` for parametric variants; kernel actions use `sqrt(d)`.
    pub action_radius: f64,
    pub noise: NoiseSpec,
    pub schedule: Schedule,
    pub change_kind: ChangeKind,
    pub kernel_centers: usize,
    pub lengthscale: f64,
    pub context_pool: usize,
    pub context_dim: usize,
    /// Redraw the context distribution at contextual change points.
    pub redraw_context_weights: bool,
}

impl SyntheticConfig {
    /// Defaults for `variant` at the given size.
    pub fn new(variant: Variant, horizon: usize, dim: usize, num_actions: usize) -> Self {
        let (param_bound, noise) = match variant {
            Variant::Linear | Variant::Glm | Variant::Kernel => (1.0, NoiseSpec::Gaussian { var: 0.01 }),
            Variant::Scb => (3.0, NoiseSpec::BernoulliOfMean),
            Variant::Contextual => (1.0, NoiseSpec::BernoulliOfMean),
        };
        Self {
            variant,
            horizon,
            dim,
            num_actions,
            param_bound,
            action_radius: 1.0,
            noise,
            schedule: Schedule::Stationary,
            change_kind: ChangeKind::Resample,
            kernel_centers: 200,
            lengthscale: 0.2,
            context_pool: 1000,
            context_dim: 10,
            redraw_context_weights: true,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |m: &str| Err(EnvError::Config(m.to_string()));
        if self.horizon < 1 || self.num_actions == 0 {
            return fail("horizon and action count must be positive");
        }
        if self.variant != Variant::Contextual && self.dim == 0 {
            return fail("dimension must be positive");
        }
        if !(self.param_bound > 0.0) || !(self.action_radius > 0.0) {
            return fail("norm bounds must be positive");
        }
        match self.noise {
            NoiseSpec::Gaussian { var } if !(var >= 0.0) => return fail("noise variance must be nonnegative"),
            NoiseSpec::BernoulliOfMean if matches!(self.variant, Variant::Linear | Variant::Kernel) => {
                return fail("bernoulli rewards need means in [0, 1]; use a logistic or contextual variant")
            }
            _ => {}
        }
        if self.variant == Variant::Contextual && (self.context_dim < 3 || self.context_pool == 0) {
            return fail("contextual variant needs a context pool with dimension >= 3");
        }
        if self.variant == Variant::Kernel && (self.kernel_centers == 0 || !(self.lengthscale > 0.0)) {
            return fail("kernel variant needs centers and a positive lengthscale");
        }
        if self.change_kind == ChangeKind::SignFlip && self.variant == Variant::Contextual {
            return fail("sign-flip changes are defined for parametric and kernel variants only");
        }
        match &self.schedule {
            Schedule::Drift(DriftSpec::RandomWalk { delta }) => {
                if !self.variant.is_parametric() {
                    return fail("random-walk drift is defined for parametric variants only");
                }
                if !(*delta >= 0.0) {
                    return fail("random-walk radius must be nonnegative");
                }
            }
            Schedule::Geometric { xi } if !(0.0..1.0).contains(xi) => return fail("xi must lie in [0, 1)"),
            Schedule::Fixed(pts) => {
                PsSchedule::new(pts.clone(), self.horizon)?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// Synthetic non-stationary environment.
///
/// Randomness is split into three independent streams so that reward
/// function realizations do not depend on which actions a learner plays:
/// `structure` (actions, models, change points, drift steps), `contexts`
/// and `noise` (one draw per pull).
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    config: SyntheticConfig,
    features: Vec<Vector>,
    candidates: Vec<usize>,
    model: RewardModel,
    drift_ends: Option<(RewardModel, RewardModel)>,
    schedule: PsSchedule,
    pool: Option<ContextPool>,
    means: Vec<f64>,
    // kernel drift blends cached endpoint means instead of re-evaluating 2M kernels
    end_means: Option<(Vec<f64>, Vec<f64>)>,
    context_id: usize,
    t: usize,
    structure: ChaCha8Rng,
    contexts: ChaCha8Rng,
    noise: ChaCha8Rng,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl SyntheticEnv {
    pub fn new(config: SyntheticConfig, seed: u64) -> Result<Self, EnvError> {
        config.validate()?;
        let mut structure = stream(seed, 0x5EED_0001);
        let contexts = stream(seed, 0x5EED_0002);
        let noise = stream(seed, 0x5EED_0003);

        let features = Self::make_actions(&config, &mut structure);
        let candidates = (0..config.num_actions).collect();
        let pool = (config.variant == Variant::Contextual)
            .then(|| ContextPool::random(&mut structure, config.context_pool, config.context_dim));
        let model = Self::fresh_model(&config, &mut structure);
        let schedule = match &config.schedule {
            Schedule::Geometric { xi } => sample_geometric_changepoints(&mut structure, config.horizon.max(2), *xi)?,
            Schedule::Fixed(pts) => PsSchedule::new(pts.clone(), config.horizon)?,
            _ => PsSchedule::default(),
        };
        let drift_ends = match config.schedule {
            Schedule::Drift(DriftSpec::LinearInterp) => {
                let end = Self::fresh_model(&config, &mut structure);
                Some((model.clone(), end))
            }
            _ => None,
        };
        let mut env = Self {
            config,
            features,
            candidates,
            model,
            drift_ends,
            schedule,
            pool,
            means: Vec::new(),
            end_means: None,
            context_id: 0,
            t: 0,
            structure,
            contexts,
            noise,
        };
        if env.config.variant == Variant::Kernel {
            if let Some((a, b)) = &env.drift_ends {
                let ma = env.evaluate(a);
                let mb = env.evaluate(b);
                env.end_means = Some((ma, mb));
            }
        }
        env.refresh_means();
        Ok(env)
    }

    fn make_actions(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<Vector> {
        if config.variant == Variant::Contextual {
            return (0..config.num_actions)
                .map(|a| {
                    let mut e = Vector::zeros(config.num_actions);
                    e[a] = 1.0;
                    e
                })
                .collect();
        }
        let raw: Vec<Vector> = (0..config.num_actions)
            .map(|_| Vector::from_fn(config.dim, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let radius = if config.variant == Variant::Kernel {
            (config.dim as f64).sqrt()
        } else {
            config.action_radius
        };
        let max_norm = raw.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if max_norm == 0.0 {
            return raw;
        }
        raw.into_iter().map(|a| a * (radius / max_norm)).collect()
    }

    fn fresh_model(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> RewardModel {
        match config.variant {
            Variant::Linear => RewardModel::Linear {
                theta: make_parametric_model(rng, config.dim, config.param_bound),
            },
            Variant::Glm => RewardModel::Glm {
                theta: make_parametric_model(rng, config.dim, config.param_bound),
            },
            Variant::Scb => RewardModel::Scb {
                theta: make_parametric_model(rng, config.dim, config.param_bound),
            },
            Variant::Kernel => RewardModel::Kernel(make_kernel_model(
                rng,
                config.dim,
                (config.dim as f64).sqrt(),
                config.kernel_centers,
                config.lengthscale,
            )),
            Variant::Contextual => {
                RewardModel::Contextual(make_contextual_model(rng, config.num_actions, config.context_dim))
            }
        }
    }

    fn evaluate(&self, model: &RewardModel) -> Vec<f64> {
        self.features
            .iter()
            .enumerate()
            .map(|(a, x)| model.mean(None, a, x))
            .collect()
    }

    fn refresh_means(&mut self) {
        if self.config.variant != Variant::Contextual {
            self.means = self.evaluate(&self.model);
        }
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    /// Reward function in force for the current round.
    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn schedule(&self) -> &PsSchedule {
        &self.schedule
    }

    pub fn context_pool(&self) -> Option<&ContextPool> {
        self.pool.as_ref()
    }

    /// Radius of the ball containing all action features.
    pub fn action_radius(&self) -> f64 {
        match self.config.variant {
            Variant::Kernel => (self.config.dim as f64).sqrt(),
            Variant::Contextual => 1.0,
            _ => self.config.action_radius,
        }
    }

    fn apply_change(&mut self) {
        match self.config.change_kind {
            ChangeKind::SignFlip => {
                self.model = match &self.model {
                    RewardModel::Kernel(k) => {
                        let mut k = k.clone();
                        k.weights.iter_mut().for_each(|w| *w = -*w);
                        RewardModel::Kernel(k)
                    }
                    m => m.with_theta(-m.theta().expect("parametric model").clone()),
                };
            }
            ChangeKind::Resample => {
                self.model = Self::fresh_model(&self.config, &mut self.structure);
                if self.config.redraw_context_weights {
                    if let Some(pool) = self.pool.as_mut() {
                        pool.redraw_weights(&mut self.structure);
                    }
                }
            }
        }
        self.refresh_means();
    }

    fn random_walk_step(&mut self, delta: f64) {
        let theta = self.model.theta().expect("random walk on parametric model").clone();
        let bound = self.config.param_bound;
        let next = loop {
            let step = sample_in_ball(&mut self.structure, theta.len(), delta);
            let cand = &theta + step;
            if cand.norm() <= bound {
                break cand;
            }
        };
        self.model = self.model.with_theta(next);
        self.refresh_means();
    }
}

impl Environment for SyntheticEnv {
    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn num_contexts(&self) -> usize {
        self.pool.as_ref().map_or(1, ContextPool::len)
    }

    fn features(&self) -> &[Vector] {
        &self.features
    }

    fn reward_kind(&self) -> RewardKind {
        match self.config.noise {
            NoiseSpec::Gaussian { .. } => RewardKind::Gaussian,
            NoiseSpec::BernoulliOfMean => RewardKind::Bernoulli,
        }
    }

    fn noise_var(&self) -> Option<f64> {
        match self.config.noise {
            NoiseSpec::Gaussian { var } => Some(var),
            NoiseSpec::BernoulliOfMean => None,
        }
    }

    fn advance(&mut self, t: usize) -> Result<RoundInfo, EnvError> {
        if t != self.t + 1 {
            return Err(EnvError::OutOfOrder {
                expected: self.t + 1,
                got: t,
            });
        }
        if t > self.config.horizon {
            return Err(EnvError::PastHorizon {
                t,
                horizon: self.config.horizon,
            });
        }
        self.t = t;
        match self.config.schedule {
            Schedule::Geometric { .. } | Schedule::Fixed(_) => {
                if self.schedule.is_change(t) {
                    self.apply_change();
                }
            }
            Schedule::Drift(DriftSpec::LinearInterp) => {
                let w = t as f64 / self.config.horizon as f64;
                let (init, end) = self.drift_ends.as_ref().expect("drift endpoints");
                if let Some((ma, mb)) = &self.end_means {
                    self.means = ma.iter().zip(mb).map(|(a, b)| (1.0 - w) * a + w * b).collect();
                    // the blended model itself is only materialized on request
                } else {
                    self.model = init.interpolate(end, w)?;
                    self.refresh_means();
                }
            }
            Schedule::Drift(DriftSpec::RandomWalk { delta }) => {
                if t > 1 {
                    self.random_walk_step(delta);
                }
            }
            Schedule::Stationary => {}
        }
        let context = match &self.pool {
            Some(pool) => {
                self.context_id = pool.sample(&mut self.contexts);
                Some(pool.get(self.context_id).clone())
            }
            None => None,
        };
        Ok(RoundInfo {
            t,
            context_id: self.context_id,
            context,
            candidates: self.candidates.clone(),
        })
    }

    fn mean(&self, action: usize) -> f64 {
        match (&self.model, &self.pool) {
            (RewardModel::Contextual(_), Some(pool)) => {
                self.model
                    .mean(Some(pool.get(self.context_id)), action, &self.features[action])
            }
            _ => self.means[action],
        }
    }

    fn pull(&mut self, action: usize) -> Option<f64> {
        let mean = self.mean(action);
        Some(match self.config.noise {
            NoiseSpec::Gaussian { var } => mean + var.sqrt() * self.noise.sample::<f64, _>(StandardNormal),
            NoiseSpec::BernoulliOfMean => f64::from(u8::from(self.noise.random::<f64>() < mean)),
        })
    }

    fn change_points(&self) -> &[usize] {
        self.schedule.change_points()
    }
}

impl SyntheticEnv {
    /// The kernel drift model for the current round (blended on demand).
    pub fn current_model(&self) -> Result<RewardModel, EnvError> {
        match (&self.drift_ends, &self.end_means) {
            (Some((a, b)), Some(_)) => a.interpolate(b, self.t as f64 / self.config.horizon as f64),
            _ => Ok(self.model.clone()),
        }
    }
}
