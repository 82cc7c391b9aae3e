//! Ground-truth non-stationary environments.
//!
//! Synthetic environments cover linear, logistic (Gaussian and Bernoulli
//! feedback), kernel and contextual reward structures under piecewise
//! stationary, linearly drifting or random-walk schedules. Replay
//! environments drive the same interface from CSV files.

mod context;
mod model;
mod replay;
mod schedule;
mod synthetic;

pub use context::ContextPool;
pub use model::{
    contextual_mean, make_contextual_model, make_kernel_model, make_parametric_model,
    sample_in_ball, ContextualArm, ContextualModel, KernelModel, RewardModel,
};
pub use replay::{load_replay, write_logged_csv, write_matrix_csv, LoggedRound, LoggedReplay, MatrixReplay};
pub use schedule::{sample_geometric_changepoints, PsSchedule};
pub use synthetic::{ChangeKind, DriftSpec, NoiseSpec, Schedule, SyntheticConfig, SyntheticEnv, Variant};

use thiserror::Error;

use crate::round::Vector;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("rounds must be visited in order: expected t = {expected}, got {got}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("round {t} is past the horizon {horizon}")]
    PastHorizon { t: usize, horizon: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error("malformed replay file {path} at line {line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
    #[error("replay file {path}: timestamps not strictly increasing at line {line} ({prev} then {next})")]
    NonMonotone {
        path: String,
        line: usize,
        prev: i64,
        next: i64,
    },
    #[error("replay file {path} at line {line}: displayed id {displayed} is not a candidate")]
    DisplayedNotCandidate { path: String, line: usize, displayed: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How observed rewards are distributed around the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardKind {
    /// Additive Gaussian noise (possibly with zero variance).
    Gaussian,
    /// Bernoulli draws with the mean as success probability.
    Bernoulli,
}

/// What the learner observes at the start of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInfo {
    pub t: usize,
    pub context_id: usize,
    pub context: Option<Vector>,
    pub candidates: Vec<usize>,
}

/// A (possibly non-stationary) bandit environment stepped once per round.
pub trait Environment: Send {
    fn horizon(&self) -> usize;

    /// Size of the context pool (1 for non-contextual environments).
    fn num_contexts(&self) -> usize {
        1
    }

    /// Feature vectors of all actions, indexed by global action id.
    fn features(&self) -> &[Vector];

    fn reward_kind(&self) -> RewardKind;

    /// Known noise variance, if any.
    fn noise_var(&self) -> Option<f64> {
        None
    }

    /// Advances to round `t` (rounds start at 1 and go up by one).
    fn advance(&mut self, t: usize) -> Result<RoundInfo, EnvError>;

    /// True mean reward of `action` in the current round.
    fn mean(&self, action: usize) -> f64;

    /// Samples the reward of `action`. `None` means the round yields no
    /// feedback for that action (logged replay miss).
    fn pull(&mut self, action: usize) -> Option<f64>;

    /// Whether true means exist, so dynamic regret can be computed.
    fn has_means(&self) -> bool {
        true
    }

    /// Known change points (rounds at which a new segment starts).
    fn change_points(&self) -> &[usize] {
        &[]
    }

    /// Exhaustive argmax of the true mean over the round's candidates; ties
    /// go to the lowest candidate position.
    fn oracle_best(&self, info: &RoundInfo) -> (usize, f64) {
        let mut best = (info.candidates[0], self.mean(info.candidates[0]));
        for &a in &info.candidates[1..] {
            let m = self.mean(a);
            if m > best.1 {
                best = (a, m);
            }
        }
        best
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn num_contexts(&self) -> usize {
        (**self).num_contexts()
    }
    fn features(&self) -> &[Vector] {
        (**self).features()
    }
    fn reward_kind(&self) -> RewardKind {
        (**self).reward_kind()
    }
    fn noise_var(&self) -> Option<f64> {
        (**self).noise_var()
    }
    fn advance(&mut self, t: usize) -> Result<RoundInfo, EnvError> {
        (**self).advance(t)
    }
    fn mean(&self, action: usize) -> f64 {
        (**self).mean(action)
    }
    fn pull(&mut self, action: usize) -> Option<f64> {
        (**self).pull(action)
    }
    fn has_means(&self) -> bool {
        (**self).has_means()
    }
    fn change_points(&self) -> &[usize] {
        (**self).change_points()
    }
    fn oracle_best(&self, info: &RoundInfo) -> (usize, f64) {
        (**self).oracle_best(info)
    }
}
