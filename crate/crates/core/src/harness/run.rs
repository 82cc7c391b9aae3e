use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{EnvVariant, ExperimentConfig, FamilyKind, PolicyKind, RunMode, SquareCbOracleKind};
use super::HarnessError;
use crate::dal::{build_cover, CoverMode, CoveringSet, Dal, Detector, ExplorationScheduler, GlrDetector};
use crate::detect::{GlrConfig, GlrFamily, DEFAULT_SIGMA2};
use crate::envs::{load_replay, Environment, RewardKind, SyntheticEnv};
use crate::policies::{
    FiniteUcb, FiniteUcbConfig, GlmUcb, GlmUcbConfig, GpUcb, GpUcbConfig, LinUcb, LinUcbConfig, Policy, SquareCb,
    SquareCbConfig, SquareCbOracle, UniformRandom, Width,
};
use crate::round::{Round, Vector};

/// Per-round record of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// `f_t(a*) - f_t(a_t)` on true means.
    pub instant: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Cumulative observed reward.
    pub reward: Vec<f64>,
    /// Rounds at which DAL restarted.
    pub restarts: Vec<usize>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.instant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instant.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Trial-wise aggregates.
#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub mean_regret: Vec<f64>,
    pub stderr_regret: Vec<f64>,
    pub mean_reward: Vec<f64>,
    pub final_regrets: Vec<f64>,
    pub restarts: Vec<Vec<usize>>,
    pub wall_clock: Vec<Duration>,
}

impl AggregateResult {
    pub fn from_traces(traces: &[RegretTrace], wall_clock: Vec<Duration>) -> Result<Self, HarnessError> {
        let n = traces.len();
        let len = traces.first().map_or(0, RegretTrace::len);
        if n == 0 || traces.iter().any(|t| t.len() != len) {
            return Err(HarnessError::Runtime("traces must be nonempty and of equal length".into()));
        }
        let nf = n as f64;
        let mut mean_regret = vec![0.0; len];
        let mut stderr_regret = vec![0.0; len];
        let mut mean_reward = vec![0.0; len];
        for i in 0..len {
            let mean = traces.iter().map(|t| t.cumulative[i]).sum::<f64>() / nf;
            mean_regret[i] = mean;
            mean_reward[i] = traces.iter().map(|t| t.reward[i]).sum::<f64>() / nf;
            if n > 1 {
                let var = traces.iter().map(|t| (t.cumulative[i] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
                stderr_regret[i] = (var / nf).sqrt();
            }
        }
        Ok(Self {
            mean_regret,
            stderr_regret,
            mean_reward,
            final_regrets: traces.iter().map(RegretTrace::final_regret).collect(),
            restarts: traces.iter().map(|t| t.restarts.clone()).collect(),
            wall_clock,
        })
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }

    pub fn mean_restarts(&self) -> f64 {
        self.restarts.iter().map(Vec::len).sum::<usize>() as f64 / self.restarts.len() as f64
    }
}

pub fn build_environment(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn Environment>, HarnessError> {
    if cfg.env.variant == EnvVariant::Replay {
        let path = cfg.env.path.as_ref().expect("validated replay path");
        let env = load_replay(path, cfg.noise_spec(), seed)?;
        if let Some(t) = cfg.horizon {
            if t > env.horizon() {
                return Err(HarnessError::Config(format!(
                    "horizon {t} exceeds the {} rounds in {}",
                    env.horizon(),
                    path.display()
                )));
            }
        }
        return Ok(env);
    }
    Ok(Box::new(SyntheticEnv::new(cfg.synthetic()?, seed)?))
}

fn param_bound(cfg: &ExperimentConfig) -> f64 {
    cfg.env.param_bound.unwrap_or(match cfg.env.variant {
        EnvVariant::Scb => 3.0,
        _ => 1.0,
    })
}

fn max_norm(features: &[Vector]) -> f64 {
    features.iter().map(|a| a.norm()).fold(0.0, f64::max)
}

pub fn build_policy(cfg: &ExperimentConfig, env: &dyn Environment, horizon: usize) -> Result<Box<dyn Policy>, HarnessError> {
    let a = &cfg.algo;
    let features = env.features();
    let dim = features.first().map_or(0, Vector::len);
    let noise_var = a.noise_var.or(env.noise_var()).filter(|&v| v > 0.0).unwrap_or(DEFAULT_SIGMA2);
    let delta = a.delta.unwrap_or(1.0 / horizon as f64);
    let width = match a.width {
        Some(beta) => Width::Fixed(beta),
        None => Width::SelfNormalized {
            noise_sd: noise_var.sqrt(),
            param_bound: param_bound(cfg),
            action_bound: max_norm(features),
            delta,
        },
    };
    Ok(match a.policy {
        PolicyKind::Linucb => Box::new(LinUcb::new(LinUcbConfig::new(dim, a.lambda, width))?),
        PolicyKind::GlmUcb => Box::new(GlmUcb::new(GlmUcbConfig::new(dim, a.lambda, param_bound(cfg), width))?),
        PolicyKind::GpUcb => Box::new(GpUcb::new(GpUcbConfig {
            lengthscale: a.lengthscale,
            noise_var,
            delta: a.delta.unwrap_or(0.1),
            width_scale: a.width_scale,
            max_observations: a.max_observations,
        })?),
        PolicyKind::Squarecb => {
            let oracle = match a.oracle {
                Some(SquareCbOracleKind::Ridge) => SquareCbOracle::Ridge { lambda: a.lambda },
                Some(SquareCbOracleKind::Logistic) => SquareCbOracle::Logistic {
                    learning_rate: a.learning_rate,
                },
                None if env.reward_kind() == RewardKind::Bernoulli => SquareCbOracle::Logistic {
                    learning_rate: a.learning_rate,
                },
                None => SquareCbOracle::Ridge { lambda: a.lambda },
            };
            Box::new(SquareCb::new(SquareCbConfig {
                oracle,
                gamma_scale: a.gamma_scale,
            })?)
        }
        PolicyKind::Ducb => Box::new(FiniteUcb::new(FiniteUcbConfig {
            discount: a.discount,
            xi: a.xi,
        })?),
        PolicyKind::Ucb1 => Box::new(FiniteUcb::new(FiniteUcbConfig::default())?),
        PolicyKind::Uniform => Box::new(UniformRandom),
    })
}

/// The covering set DAL would use in this environment.
pub fn trial_cover(cfg: &ExperimentConfig, env: &dyn Environment) -> Result<CoveringSet, HarnessError> {
    let features = env.features();
    let dim = features.first().map_or(0, Vector::len);
    // kernel covers live on [0, R]^d: shift the ball of radius r onto [0, 2r]^d
    let r = max_norm(features).max(f64::MIN_POSITIVE);
    let cover_cfg = cfg.covering(dim, 2.0 * r);
    if cover_cfg.mode != CoverMode::KernelCover {
        return Ok(build_cover(features, &cover_cfg)?);
    }
    let shifted: Vec<Vector> = features.iter().map(|a| a.add_scalar(r)).collect();
    let cover = build_cover(&shifted, &cover_cfg)?;
    Ok(CoveringSet {
        actions: cover.ids.iter().map(|&i| features[i].clone()).collect(),
        ids: cover.ids,
    })
}

fn glr_config(cfg: &ExperimentConfig, env: &dyn Environment, horizon: usize) -> Result<GlrConfig, HarnessError> {
    let family = match cfg.dal.family {
        Some(FamilyKind::Bernoulli) => GlrFamily::Bernoulli,
        Some(FamilyKind::Gaussian) => GlrFamily::Gaussian {
            sigma2: cfg.dal.sigma2.unwrap_or(DEFAULT_SIGMA2),
        },
        None => match env.reward_kind() {
            RewardKind::Bernoulli => GlrFamily::Bernoulli,
            RewardKind::Gaussian => GlrFamily::Gaussian {
                sigma2: cfg
                    .dal
                    .sigma2
                    .or(env.noise_var().filter(|&v| v > 0.0))
                    .unwrap_or(DEFAULT_SIGMA2),
            },
        },
    };
    let delta_f = cfg.dal.delta_f.unwrap_or(1.0 / horizon as f64);
    let glr = GlrConfig {
        family,
        delta_f,
        delta_d: cfg.dal.delta_d.unwrap_or(delta_f),
        max_history: cfg.dal.max_history,
        stride: cfg.dal.stride,
    };
    glr.validate()?;
    Ok(glr)
}

enum Learner {
    Bare(Box<dyn Policy>),
    OracleRestart {
        policy: Box<dyn Policy>,
        change_points: Vec<usize>,
        next: usize,
    },
    Dal(Box<Dal<Box<dyn Policy>, Box<dyn Detector>>>),
    Oracle,
}

/// Runs one trial with the given seed; deterministic in `(cfg, seed)`.
pub fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<RegretTrace, HarnessError> {
    let mut env = build_environment(cfg, seed)?;
    let horizon = cfg.horizon.unwrap_or(env.horizon());
    if horizon < 3 {
        return Err(HarnessError::Config("horizon must be at least 3".into()));
    }
    let features = env.features().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let mut learner = match cfg.algo.mode {
        RunMode::Oracle => {
            if !env.has_means() {
                return Err(HarnessError::Config("the oracle needs true means".into()));
            }
            Learner::Oracle
        }
        RunMode::Bare => Learner::Bare(build_policy(cfg, env.as_ref(), horizon)?),
        RunMode::OracleRestart => Learner::OracleRestart {
            policy: build_policy(cfg, env.as_ref(), horizon)?,
            change_points: env.change_points().to_vec(),
            next: 0,
        },
        RunMode::Dal => {
            let policy = build_policy(cfg, env.as_ref(), horizon)?;
            let cover = trial_cover(cfg, env.as_ref())?;
            let detector: Box<dyn Detector> = Box::new(GlrDetector::new(glr_config(cfg, env.as_ref(), horizon)?));
            let monitor_all = cfg.dal.monitor_all.unwrap_or(true);
            let n_e = cover.len();
            let mut dal = Dal::new(policy, detector, cover, horizon, env.num_contexts(), monitor_all)?;
            if let Some(len) = cfg.dal.cycle_length {
                let sched = ExplorationScheduler::new(horizon, n_e, env.num_contexts())?.with_cycle_length(len);
                dal = dal.with_scheduler(sched);
            }
            Learner::Dal(Box::new(dal))
        }
    };

    let mut trace = RegretTrace {
        instant: Vec::with_capacity(horizon),
        cumulative: Vec::with_capacity(horizon),
        reward: Vec::with_capacity(horizon),
        restarts: Vec::new(),
    };
    let (mut regret, mut reward) = (0.0, 0.0);
    for t in 1..=horizon {
        let info = env.advance(t)?;
        let round = Round::new(t, &info.candidates, &features).with_context(info.context_id, info.context.as_ref());
        let runtime = |e: crate::policies::PolicyError| HarnessError::Runtime(format!("round {t}: {e}"));
        let (action, forced) = match &mut learner {
            Learner::Oracle => (env.oracle_best(&info).0, None),
            Learner::Bare(p) => (info.candidates[p.select(&round, &mut rng).map_err(runtime)?], None),
            Learner::OracleRestart {
                policy,
                change_points,
                next,
            } => {
                if *next < change_points.len() && change_points[*next] <= t {
                    *next += 1;
                    policy.reset();
                    trace.restarts.push(t);
                }
                (info.candidates[policy.select(&round, &mut rng).map_err(runtime)?], None)
            }
            Learner::Dal(d) => {
                let c = d
                    .choose(&round, &mut rng)
                    .map_err(|e| HarnessError::Runtime(format!("round {t}: {e}")))?;
                (c.action, Some(c))
            }
        };
        let inst = if env.has_means() {
            env.oracle_best(&info).1 - env.mean(action)
        } else {
            0.0
        };
        // forced plays of actions outside the round's candidates reveal nothing
        let observed = if info.candidates.contains(&action) {
            env.pull(action)
        } else {
            None
        };
        match &mut learner {
            Learner::Bare(p) | Learner::OracleRestart { policy: p, .. } => {
                if let Some(r) = observed {
                    p.update(&round, action, r).map_err(runtime)?;
                }
            }
            Learner::Dal(d) => {
                let choice = forced.expect("dal choice");
                if d.observe(&round, choice, observed)
                    .map_err(|e| HarnessError::Runtime(format!("round {t}: {e}")))?
                {
                    trace.restarts.push(t);
                }
            }
            Learner::Oracle => {}
        }
        regret += inst;
        reward += observed.unwrap_or(0.0);
        trace.instant.push(inst);
        trace.cumulative.push(regret);
        trace.reward.push(reward);
    }
    Ok(trace)
}

/// Runs `cfg.trials` trials with seeds `seed, seed + 1, ...` on up to
/// `cfg.parallelism` threads. Results do not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateResult, HarnessError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<(RegretTrace, Duration), HarnessError>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let start = Instant::now();
                let seed = cfg.seed.wrapping_add(i as u64);
                run_trial(cfg, seed)
                    .map(|trace| (trace, start.elapsed()))
                    .map_err(|e| match e {
                        HarnessError::Runtime(m) => HarnessError::Runtime(format!("trial {i} (seed {seed}): {m}")),
                        other => other,
                    })
            })
            .collect()
    });
    let mut traces = Vec::with_capacity(cfg.trials);
    let mut clocks = Vec::with_capacity(cfg.trials);
    for outcome in outcomes {
        let (trace, clock) = outcome?;
        traces.push(trace);
        clocks.push(clock);
    }
    AggregateResult::from_traces(&traces, clocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn oracle_has_zero_regret() {
        let c = cfg("horizon = 300\nenv.schedule = \"geometric\"\nenv.xi = 0.3\nalgo.mode = \"oracle\"\n");
        let trace = run_trial(&c, 4).unwrap();
        assert!(trace.cumulative.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn trials_are_deterministic() {
        for mode in ["dal", "bare", "oracle_restart"] {
            let c = cfg(&format!(
                "horizon = 400\nenv.schedule = \"evenly\"\nenv.changes = 2\nalgo.mode = \"{mode}\"\n"
            ));
            assert_eq!(run_trial(&c, 11).unwrap(), run_trial(&c, 11).unwrap());
        }
    }

    #[test]
    fn regret_is_monotone_with_nonnegative_steps() {
        let c = cfg("horizon = 500\nenv.variant = \"glm\"\nalgo.policy = \"glm_ucb\"\n");
        let trace = run_trial(&c, 1).unwrap();
        assert!(trace.instant.iter().all(|&r| r >= 0.0));
        assert!(trace.cumulative.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn single_trial_aggregate_is_the_trace() {
        let c = cfg("horizon = 200\ntrials = 1\nseed = 9\nalgo.mode = \"bare\"\n");
        let agg = run_experiment(&c).unwrap();
        let trace = run_trial(&c, 9).unwrap();
        assert_eq!(agg.mean_regret, trace.cumulative);
        assert!(agg.stderr_regret.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn aggregate_final_is_mean_of_finals() {
        let c = cfg("horizon = 200\ntrials = 5\nalgo.policy = \"uniform\"\n");
        let agg = run_experiment(&c).unwrap();
        let mean = agg.final_regrets.iter().sum::<f64>() / 5.0;
        assert!((mean - agg.final_mean()).abs() < 1e-12);
    }

    #[test]
    fn every_variant_runs_under_dal() {
        let variants = [
            ("linear", "linucb"),
            ("glm", "glm_ucb"),
            ("scb", "glm_ucb"),
            ("kernel", "gp_ucb"),
            ("contextual", "squarecb"),
            ("linear", "ducb"),
            ("scb", "ucb1"),
        ];
        for (variant, policy) in variants {
            let c = cfg(&format!(
                "horizon = 150\nenv.variant = \"{variant}\"\nenv.dim = 3\nenv.actions = 8\nenv.kernel_centers = 20\nenv.context_pool = 20\nenv.schedule = \"evenly\"\nenv.changes = 1\nalgo.policy = \"{policy}\"\ndal.cycle_length = 20\n"
            ));
            let trace = run_trial(&c, 0).unwrap_or_else(|e| panic!("{variant}/{policy}: {e}"));
            assert_eq!(trace.len(), 150);
        }
    }

    #[test]
    fn oracle_restart_resets_at_changes() {
        let c = cfg("horizon = 100\nenv.schedule = \"fixed\"\nenv.change_points = [30, 70]\nalgo.mode = \"oracle_restart\"\n");
        assert_eq!(run_trial(&c, 0).unwrap().restarts, vec![30, 70]);
    }
}
