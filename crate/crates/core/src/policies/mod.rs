//! Stationary bandit policies behind one interface.
//!
//! Every policy is a deterministic state machine given its configuration and
//! the randomness source handed to [`Policy::select`], so `reset` followed by
//! a replayed transcript reproduces a fresh instance exactly. Ties in every
//! argmax go to the lowest candidate position.

mod finite_ucb;
mod glm_ucb;
mod gp_ucb;
mod lin_ucb;
mod square_cb;
mod uniform;

pub use finite_ucb::{FiniteUcb, FiniteUcbConfig};
pub use glm_ucb::{sigmoid, GlmUcb, GlmUcbConfig};
pub use gp_ucb::{se_kernel, GpUcb, GpUcbConfig};
pub use lin_ucb::{LinUcb, LinUcbConfig, Width};
pub use square_cb::{squarecb_probabilities, SquareCb, SquareCbConfig, SquareCbOracle};
pub use uniform::UniformRandom;

use rand::RngCore;
use thiserror::Error;

use crate::round::Round;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no candidate actions")]
    NoCandidates,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A stationary bandit algorithm.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Forget everything learned; static configuration is kept.
    fn reset(&mut self);

    /// Picks a position in `round.candidates`.
    fn select(&mut self, round: &Round<'_>, rng: &mut dyn RngCore) -> Result<usize, PolicyError>;

    /// Feeds back the reward of global action id `action`.
    fn update(&mut self, round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn reset(&mut self) {
        (**self).reset()
    }
    fn select(&mut self, round: &Round<'_>, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        (**self).select(round, rng)
    }
    fn update(&mut self, round: &Round<'_>, action: usize, reward: f64) -> Result<(), PolicyError> {
        (**self).update(round, action, reward)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), PolicyError> {
    if expected == got {
        Ok(())
    } else {
        Err(PolicyError::Dimension { expected, got })
    }
}
