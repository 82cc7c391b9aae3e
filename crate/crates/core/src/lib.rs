//! Detection-augmented learning for non-stationary bandits.
//!
//! A stationary bandit policy is wrapped with periodic forced exploration of a
//! covering set and a GLR change detector; whenever the detector fires on any
//! monitored reward stream the policy and all detection histories restart.
//!
//! The crate is organized bottom-up:
//!
//! - [`round`]: the per-round view handed to policies.
//! - [`detect`]: GLR change-point tests (Bernoulli and Gaussian families).
//! - [`policies`]: stationary policies behind the [`policies::Policy`] trait.
//! - [`dal`]: covering sets, the exploration schedule and the restart loop.
//! - [`envs`]: synthetic non-stationary environments and replay data.
//! - [`harness`]: configs, seeded multi-trial runs, regret accounting, CSV.

#![deny(unsafe_code)]

pub mod dal;
pub mod detect;
pub mod envs;
pub mod harness;
pub mod round;
pub mod policies;
