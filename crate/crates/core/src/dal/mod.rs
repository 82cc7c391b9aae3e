//! Detection-augmented learning: wraps a stationary policy with forced
//! exploration on a covering set, per-(context, action) change detection and
//! restarts.

mod cover;
mod schedule;

pub use cover::{build_cover, build_cover_kernel, build_cover_linear, cover_size_bound, delta_t, CoverMode, CoveringConfig, CoveringSet};
pub use schedule::{alpha_k, ExplorationScheduler, Slot};

use std::collections::HashMap;

use rand::RngCore;
use thiserror::Error;

use crate::detect::{glr_scan, DetectError, DetectionResult, GlrConfig, ObservationBuffer};
use crate::envs::RewardModel;
use crate::policies::{Policy, PolicyError};
use crate::round::{Round, Vector};

#[derive(Debug, Error)]
pub enum DalError {
    #[error("invalid DAL configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// A change detector run on one observation buffer.
pub trait Detector: Send {
    fn check(&mut self, t: usize, buffer: &ObservationBuffer) -> Result<DetectionResult, DetectError>;

    /// Largest history the detector cares about.
    fn max_history(&self) -> Option<usize> {
        None
    }
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn check(&mut self, t: usize, buffer: &ObservationBuffer) -> Result<DetectionResult, DetectError> {
        (**self).check(t, buffer)
    }
    fn max_history(&self) -> Option<usize> {
        (**self).max_history()
    }
}

#[derive(Debug, Clone)]
pub struct GlrDetector {
    pub config: GlrConfig,
}

impl GlrDetector {
    pub fn new(config: GlrConfig) -> Self {
        Self { config }
    }
}

impl Detector for GlrDetector {
    fn check(&mut self, _t: usize, buffer: &ObservationBuffer) -> Result<DetectionResult, DetectError> {
        if !buffer.len().is_multiple_of(self.config.stride) {
            return Ok(DetectionResult::NONE);
        }
        glr_scan(buffer, &self.config)
    }

    fn max_history(&self) -> Option<usize> {
        self.config.max_history
    }
}

/// Never fires.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverDetector;

impl Detector for NeverDetector {
    fn check(&mut self, _t: usize, _buffer: &ObservationBuffer) -> Result<DetectionResult, DetectError> {
        Ok(DetectionResult::NONE)
    }
}

/// Fires at the first check on or after each known change point.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    change_points: Vec<usize>,
    next: usize,
}

impl OracleDetector {
    pub fn new(change_points: Vec<usize>) -> Self {
        Self { change_points, next: 0 }
    }
}

impl Detector for OracleDetector {
    fn check(&mut self, t: usize, _buffer: &ObservationBuffer) -> Result<DetectionResult, DetectError> {
        let mut fired = false;
        while self.next < self.change_points.len() && self.change_points[self.next] <= t {
            self.next += 1;
            fired = true;
        }
        Ok(if fired {
            DetectionResult::at(0, f64::INFINITY)
        } else {
            DetectionResult::NONE
        })
    }
}

/// The action DAL picked for a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    /// Global action id.
    pub action: usize,
    /// Covering position when the play is forced.
    pub forced: Option<usize>,
}

/// The DAL wrapper around a policy `P` with detector `D`.
pub struct Dal<P, D> {
    policy: P,
    detector: D,
    cover: CoveringSet,
    scheduler: ExplorationScheduler,
    buffers: HashMap<(usize, usize), ObservationBuffer>,
    monitor_all: bool,
    restarts: Vec<usize>,
}

impl<P: Policy, D: Detector> Dal<P, D> {
    pub fn new(
        policy: P,
        detector: D,
        cover: CoveringSet,
        horizon: usize,
        n_contexts: usize,
        monitor_all: bool,
    ) -> Result<Self, DalError> {
        if cover.is_empty() {
            return Err(DalError::Config("covering set is empty".into()));
        }
        let scheduler = ExplorationScheduler::new(horizon, cover.len(), n_contexts)?;
        Ok(Self {
            policy,
            detector,
            cover,
            scheduler,
            buffers: HashMap::new(),
            monitor_all,
            restarts: Vec::new(),
        })
    }

    /// Replaces the scheduler (for instance to pin the cycle length).
    pub fn with_scheduler(mut self, scheduler: ExplorationScheduler) -> Self {
        self.scheduler = scheduler;
        self
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    pub fn cover(&self) -> &CoveringSet {
        &self.cover
    }

    pub fn scheduler(&self) -> &ExplorationScheduler {
        &self.scheduler
    }

    /// Rounds at which a restart was triggered.
    pub fn restarts(&self) -> &[usize] {
        &self.restarts
    }

    pub fn buffer(&self, context_id: usize, action: usize) -> Option<&ObservationBuffer> {
        self.buffers.get(&(context_id, action))
    }

    pub fn buffers_are_empty(&self) -> bool {
        self.buffers.values().all(ObservationBuffer::is_empty)
    }

    pub fn choose(&mut self, round: &Round<'_>, rng: &mut dyn RngCore) -> Result<Choice, DalError> {
        Ok(match self.scheduler.position(round.t) {
            Slot::Forced(i) => Choice {
                action: self.cover.ids[i],
                forced: Some(i),
            },
            Slot::Delegate => {
                let pos = self.policy.select(round, rng)?;
                Choice {
                    action: round.candidates[pos],
                    forced: None,
                }
            }
        })
    }

    /// Feeds back the outcome of `choice`; `None` means the round revealed
    /// nothing. Returns whether a restart happened.
    pub fn observe(&mut self, round: &Round<'_>, choice: Choice, reward: Option<f64>) -> Result<bool, DalError> {
        let Some(reward) = reward else {
            return Ok(false);
        };
        if choice.forced.is_none() {
            self.policy.update(round, choice.action, reward)?;
            if !self.monitor_all {
                return Ok(false);
            }
        }
        let key = (round.context_id, choice.action);
        let max_history = self.detector.max_history();
        let buffer = self
            .buffers
            .entry(key)
            .or_insert_with(|| ObservationBuffer::with_max_history(max_history));
        buffer.push(reward);
        let result = self.detector.check(round.t, buffer)?;
        if result.detected {
            self.restart(round.t)?;
        }
        Ok(result.detected)
    }

    fn restart(&mut self, t: usize) -> Result<(), DalError> {
        log::debug!("restart at t = {t}");
        self.policy.reset();
        self.buffers.clear();
        self.scheduler.restart(t)?;
        self.restarts.push(t);
        Ok(())
    }
}

/// Largest gap `|f_a(c, a) - f_b(c, a)|` over contexts and covering actions.
pub fn min_detectable_shift(
    model_a: &RewardModel,
    model_b: &RewardModel,
    cover: &CoveringSet,
    contexts: &[Option<Vector>],
) -> f64 {
    let mut best = 0.0f64;
    for ctx in contexts {
        for (&id, a) in cover.ids.iter().zip(&cover.actions) {
            let gap = (model_a.mean(ctx.as_ref(), id, a) - model_b.mean(ctx.as_ref(), id, a)).abs();
            best = best.max(gap);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::GlrFamily;
    use crate::policies::{LinUcb, LinUcbConfig, UniformRandom, Width};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(d: usize) -> Vec<Vector> {
        (0..d).map(|i| Vector::from_fn(d, |j, _| f64::from(u8::from(i == j)))).collect()
    }

    #[test]
    fn shift_of_identical_models_is_zero() {
        let m = RewardModel::Linear {
            theta: Vector::from_vec(vec![0.3, -0.2]),
        };
        let cover = CoveringSet::full(&basis(2));
        assert_eq!(min_detectable_shift(&m, &m, &cover, &[None]), 0.0);
    }

    #[test]
    fn shift_on_basis_is_coordinate_gap() {
        let a = RewardModel::Linear {
            theta: Vector::from_vec(vec![0.3, -0.2, 0.5]),
        };
        let b = RewardModel::Linear {
            theta: Vector::from_vec(vec![0.1, 0.4, 0.45]),
        };
        let cover = CoveringSet::full(&basis(3));
        assert!((min_detectable_shift(&a, &b, &cover, &[None]) - 0.6).abs() < 1e-12);
        let smaller = CoveringSet {
            ids: vec![0, 2],
            actions: vec![cover.actions[0].clone(), cover.actions[2].clone()],
        };
        assert!(min_detectable_shift(&a, &b, &smaller, &[None]) <= min_detectable_shift(&a, &b, &cover, &[None]));
    }

    fn linucb(d: usize) -> LinUcb {
        LinUcb::new(LinUcbConfig::new(d, 1.0, Width::Fixed(1.0))).unwrap()
    }

    #[test]
    fn forced_rewards_stay_out_of_the_policy() {
        let feats = basis(3);
        let ids = [0usize, 1, 2];
        let cfg = GlrConfig::new(GlrFamily::Gaussian { sigma2: 0.01 }, 0.001).unwrap();
        let mut dal = Dal::new(linucb(3), GlrDetector::new(cfg), CoveringSet::full(&feats), 100, 1, false)
            .unwrap()
            .with_scheduler(ExplorationScheduler::new(100, 3, 1).unwrap().with_cycle_length(6));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 1..=12 {
            let round = Round::new(t, &ids, &feats);
            let c = dal.choose(&round, &mut rng).unwrap();
            dal.observe(&round, c, Some(0.5)).unwrap();
            assert_eq!(c.forced.is_some(), matches!((t - 1) % 6, 0..=2));
        }
        assert_eq!(dal.policy().updates(), 6);
        for a in 0..3 {
            assert_eq!(dal.buffer(0, a).unwrap().len(), 2);
        }
    }

    #[test]
    fn monitor_all_records_delegated_plays() {
        let feats = basis(2);
        let ids = [0usize, 1];
        let mut dal = Dal::new(UniformRandom, NeverDetector, CoveringSet::full(&feats), 50, 1, true)
            .unwrap()
            .with_scheduler(ExplorationScheduler::new(50, 2, 1).unwrap().with_cycle_length(5));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in 1..=50 {
            let round = Round::new(t, &ids, &feats);
            let c = dal.choose(&round, &mut rng).unwrap();
            dal.observe(&round, c, Some(1.0)).unwrap();
        }
        let total: usize = (0..2).map(|a| dal.buffer(0, a).map_or(0, ObservationBuffer::len)).sum();
        assert_eq!(total, 50);
    }

    #[test]
    fn missing_feedback_is_ignored() {
        let feats = basis(2);
        let ids = [0usize, 1];
        let mut dal = Dal::new(linucb(2), NeverDetector, CoveringSet::full(&feats), 50, 1, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in 1..=10 {
            let round = Round::new(t, &ids, &feats);
            let c = dal.choose(&round, &mut rng).unwrap();
            assert!(!dal.observe(&round, c, None).unwrap());
        }
        assert!(dal.buffers_are_empty());
        assert_eq!(dal.policy().updates(), 0);
    }

    #[test]
    fn detection_resets_everything() {
        let feats = basis(2);
        let ids = [0usize, 1];
        let cfg = GlrConfig::new(GlrFamily::Bernoulli, 0.01).unwrap();
        let mut dal = Dal::new(linucb(2), GlrDetector::new(cfg), CoveringSet::full(&feats), 1000, 1, true)
            .unwrap()
            .with_scheduler(ExplorationScheduler::new(1000, 2, 1).unwrap().with_cycle_length(2));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut fired = None;
        for t in 1..=400 {
            let round = Round::new(t, &ids, &feats);
            let c = dal.choose(&round, &mut rng).unwrap();
            let r = if t <= 200 { 0.0 } else { 1.0 };
            if dal.observe(&round, c, Some(r)).unwrap() {
                fired = Some(t);
                break;
            }
        }
        let t = fired.expect("step change must be detected");
        assert!(t > 200 && t < 260);
        assert!(dal.buffers_are_empty());
        assert_eq!(dal.policy().updates(), 0);
        assert_eq!(dal.scheduler().k(), 2);
        assert_eq!(dal.scheduler().tau(), t);
        assert_eq!(dal.restarts(), &[t]);
    }

    #[test]
    fn oracle_detector_fires_once_per_change() {
        let mut det = OracleDetector::new(vec![5, 9]);
        let buf = ObservationBuffer::new();
        let fired: Vec<bool> = (1..=12).map(|t| det.check(t, &buf).unwrap().detected).collect();
        assert_eq!(fired.iter().filter(|&&f| f).count(), 2);
        assert!(fired[4] && fired[8]);
    }

    #[test]
    fn stationary_runs_rarely_restart() {
        let horizon = 5000;
        let mut quiet = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let feats = basis(2);
            let ids = [0usize, 1];
            let cfg = GlrConfig::new(GlrFamily::Bernoulli, 1.0 / horizon as f64).unwrap();
            let mut dal = Dal::new(UniformRandom, GlrDetector::new(cfg), CoveringSet::full(&feats), horizon, 1, true).unwrap();
            for t in 1..=horizon {
                let round = Round::new(t, &ids, &feats);
                let c = dal.choose(&round, &mut rng).unwrap();
                let p = [0.3, 0.6][c.action];
                let r = f64::from(u8::from(rng.random::<f64>() < p));
                dal.observe(&round, c, Some(r)).unwrap();
            }
            quiet += usize::from(dal.restarts().is_empty());
        }
        assert!(quiet >= 95, "{quiet} of 100 runs without restart");
    }
}
