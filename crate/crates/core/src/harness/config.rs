use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::HarnessError;
use crate::dal::{CoverMode, CoveringConfig};
use crate::envs::{ChangeKind, DriftSpec, NoiseSpec, PsSchedule, Schedule, SyntheticConfig, Variant};

/// Top-level experiment description, read from TOML with dotted keys.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Horizon `T`; replay runs take it from the file when absent.
    pub horizon: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub parallelism: usize,
    pub env: EnvSpec,
    pub algo: AlgoSpec,
    pub dal: DalSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            trials: 1,
            seed: 0,
            parallelism: 1,
            env: EnvSpec::default(),
            algo: AlgoSpec::default(),
            dal: DalSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvVariant {
    Linear,
    Glm,
    Scb,
    Kernel,
    Contextual,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Stationary,
    Geometric,
    Fixed,
    Evenly,
    LinearDrift,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeSpec {
    Resample,
    SignFlip,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSpec {
    pub variant: EnvVariant,
    pub dim: usize,
    pub actions: usize,
    pub param_bound: Option<f64>,
    pub action_radius: f64,
    pub noise: Option<NoiseKind>,
    pub noise_var: Option<f64>,
    pub schedule: ScheduleKind,
    pub xi: f64,
    pub change_points: Vec<usize>,
    pub changes: usize,
    pub change_kind: ChangeSpec,
    /// Random-walk step radius.
    pub delta: f64,
    pub kernel_centers: usize,
    pub lengthscale: f64,
    pub context_pool: usize,
    pub context_dim: usize,
    pub redraw_context_weights: bool,
    /// Replay file.
    pub path: Option<PathBuf>,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            variant: EnvVariant::Linear,
            dim: 5,
            actions: 20,
            param_bound: None,
            action_radius: 1.0,
            noise: None,
            noise_var: None,
            schedule: ScheduleKind::Stationary,
            xi: 0.5,
            change_points: Vec::new(),
            changes: 0,
            change_kind: ChangeSpec::Resample,
            delta: 0.01,
            kernel_centers: 200,
            lengthscale: 0.2,
            context_pool: 1000,
            context_dim: 10,
            redraw_context_weights: true,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Linucb,
    GlmUcb,
    GpUcb,
    Squarecb,
    Ducb,
    Ucb1,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// The policy wrapped in DAL.
    Dal,
    /// The policy alone, never restarted.
    Bare,
    /// The policy reset exactly at the true change points.
    OracleRestart,
    /// Always plays the best action.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SquareCbOracleKind {
    Ridge,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgoSpec {
    pub policy: PolicyKind,
    pub mode: RunMode,
    pub lambda: f64,
    /// Fixed confidence width; the self-normalized bound is used when absent.
    pub width: Option<f64>,
    /// Confidence level of the width; defaults to `1/T` (`0.1` for GP-UCB).
    pub delta: Option<f64>,
    pub lengthscale: f64,
    pub noise_var: Option<f64>,
    pub width_scale: f64,
    pub max_observations: usize,
    pub oracle: Option<SquareCbOracleKind>,
    pub learning_rate: f64,
    pub gamma_scale: f64,
    pub discount: f64,
    pub xi: f64,
}

impl Default for AlgoSpec {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Linucb,
            mode: RunMode::Dal,
            lambda: 1.0,
            width: None,
            delta: None,
            lengthscale: 0.2,
            noise_var: None,
            width_scale: 1.0,
            max_observations: 2000,
            oracle: None,
            learning_rate: 0.05,
            gamma_scale: 1.0,
            discount: 0.99,
            xi: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    Linear,
    Kernel,
    Full,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DalSpec {
    /// Defaults to `1/T`.
    pub delta_f: Option<f64>,
    pub delta_d: Option<f64>,
    pub family: Option<FamilyKind>,
    pub sigma2: Option<f64>,
    pub stride: usize,
    pub max_history: Option<usize>,
    pub monitor_all: Option<bool>,
    pub cover: Option<CoverKind>,
    pub tol: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    /// Defaults to `(ln T)^(d + 1)`.
    pub gamma_t: Option<f64>,
    /// Pins the cycle length instead of `ceil(N_e / alpha_k)`.
    pub cycle_length: Option<usize>,
}

impl Default for DalSpec {
    fn default() -> Self {
        Self {
            delta_f: None,
            delta_d: None,
            family: None,
            sigma2: None,
            stride: 1,
            max_history: None,
            monitor_all: None,
            cover: None,
            tol: 1e-8,
            p: 0.0,
            q: 0.5,
            c: 1.0,
            gamma_t: None,
            cycle_length: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate_basic()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate_basic(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.parallelism == 0 {
            return fail("parallelism must be at least 1");
        }
        match (self.env.variant, self.horizon) {
            (EnvVariant::Replay, _) => {
                if self.env.path.is_none() {
                    return fail("replay environments need env.path");
                }
            }
            (_, None) => return fail("horizon is required"),
            (_, Some(t)) if t < 3 => return fail("horizon must be at least 3"),
            _ => {}
        }
        if self.dal.stride == 0 {
            return fail("dal.stride must be at least 1");
        }
        Ok(())
    }

    /// Full validation, including the environment and covering parameters.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.validate_basic()?;
        if self.env.variant != EnvVariant::Replay {
            self.synthetic()?.validate()?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(0)
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        let bernoulli_default = matches!(self.env.variant, EnvVariant::Scb | EnvVariant::Contextual);
        match self.env.noise {
            Some(NoiseKind::Bernoulli) => NoiseSpec::BernoulliOfMean,
            Some(NoiseKind::Gaussian) => NoiseSpec::Gaussian {
                var: self.env.noise_var.unwrap_or(0.01),
            },
            None if bernoulli_default => NoiseSpec::BernoulliOfMean,
            None => NoiseSpec::Gaussian {
                var: self.env.noise_var.unwrap_or(if self.env.variant == EnvVariant::Replay { 0.0 } else { 0.01 }),
            },
        }
    }

    /// Synthetic environment configuration (not for replay).
    pub fn synthetic(&self) -> Result<SyntheticConfig, HarnessError> {
        let e = &self.env;
        let variant = match e.variant {
            EnvVariant::Linear => Variant::Linear,
            EnvVariant::Glm => Variant::Glm,
            EnvVariant::Scb => Variant::Scb,
            EnvVariant::Kernel => Variant::Kernel,
            EnvVariant::Contextual => Variant::Contextual,
            EnvVariant::Replay => return Err(HarnessError::Config("replay is not a synthetic variant".into())),
        };
        let horizon = self.horizon();
        let mut cfg = SyntheticConfig::new(variant, horizon, e.dim, e.actions);
        if let Some(s) = e.param_bound {
            cfg.param_bound = s;
        }
        cfg.action_radius = e.action_radius;
        cfg.noise = self.noise_spec();
        cfg.schedule = match e.schedule {
            ScheduleKind::Stationary => Schedule::Stationary,
            ScheduleKind::Geometric => Schedule::Geometric { xi: e.xi },
            ScheduleKind::Fixed => Schedule::Fixed(e.change_points.clone()),
            ScheduleKind::Evenly => Schedule::Fixed(PsSchedule::evenly_spaced(e.changes, horizon)?.change_points().to_vec()),
            ScheduleKind::LinearDrift => Schedule::Drift(DriftSpec::LinearInterp),
            ScheduleKind::RandomWalk => Schedule::Drift(DriftSpec::RandomWalk { delta: e.delta }),
        };
        cfg.change_kind = match e.change_kind {
            ChangeSpec::Resample => ChangeKind::Resample,
            ChangeSpec::SignFlip => ChangeKind::SignFlip,
        };
        cfg.kernel_centers = e.kernel_centers;
        cfg.lengthscale = e.lengthscale;
        cfg.context_pool = e.context_pool;
        cfg.context_dim = e.context_dim;
        cfg.redraw_context_weights = e.redraw_context_weights;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Covering configuration for actions living in `[0, side]^dim`.
    pub fn covering(&self, dim: usize, side: f64) -> CoveringConfig {
        let horizon = self.horizon().max(3) as f64;
        let mode = match self.dal.cover {
            Some(CoverKind::Linear) => CoverMode::LinearIndependent,
            Some(CoverKind::Kernel) => CoverMode::KernelCover,
            Some(CoverKind::Full) => CoverMode::FullActionSet,
            None => match self.env.variant {
                EnvVariant::Kernel => CoverMode::KernelCover,
                EnvVariant::Contextual | EnvVariant::Replay => CoverMode::FullActionSet,
                _ => CoverMode::LinearIndependent,
            },
        };
        CoveringConfig {
            mode,
            tol: self.dal.tol,
            radius: side,
            dim,
            p: self.dal.p,
            q: self.dal.q,
            c: self.dal.c,
            gamma_t: self.dal.gamma_t.unwrap_or_else(|| horizon.ln().powi(dim as i32 + 1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_parse() {
        let cfg = ExperimentConfig::from_toml(
            "horizon = 100\ntrials = 3\nenv.variant = \"glm\"\nenv.schedule = \"geometric\"\nenv.xi = 0.6\nalgo.policy = \"glm_ucb\"\ndal.delta_f = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.horizon, Some(100));
        assert_eq!(cfg.env.variant, EnvVariant::Glm);
        assert_eq!(cfg.algo.policy, PolicyKind::GlmUcb);
        assert_eq!(cfg.dal.delta_f, Some(0.01));
        assert_eq!(cfg.synthetic().unwrap().schedule, Schedule::Geometric { xi: 0.6 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("horizon = 10\nenv.colour = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("horizon = 10\nalgo.policy = \"magic\"\n").is_err());
    }

    #[test]
    fn basic_validation() {
        assert!(ExperimentConfig::from_toml("trials = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("horizon = 2\n").is_err());
        assert!(ExperimentConfig::from_toml("horizon = 10\ntrials = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("env.variant = \"replay\"\n").is_err());
        assert!(ExperimentConfig::from_toml("env.variant = \"replay\"\nenv.path = \"x.csv\"\n").is_ok());
    }

    #[test]
    fn evenly_spaced_changes() {
        let cfg = ExperimentConfig::from_toml("horizon = 10000\nenv.schedule = \"evenly\"\nenv.changes = 3\n").unwrap();
        assert_eq!(cfg.synthetic().unwrap().schedule, Schedule::Fixed(vec![2501, 5001, 7501]));
    }
}
