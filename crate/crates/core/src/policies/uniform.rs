use rand::{Rng, RngCore};

use super::{Policy, PolicyError};
use crate::round::Round;

/// Picks a candidate uniformly at random. Baseline and sanity oracle.
#[derive(Debug, Clone, Default)]
pub struct UniformRandom;

impl Policy for UniformRandom {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn reset(&mut self) {}

    fn select(&mut self, round: &Round<'_>, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if round.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        Ok(rng.random_range(0..round.len()))
    }

    fn update(&mut self, _: &Round<'_>, _: usize, _: f64) -> Result<(), PolicyError> {
        Ok(())
    }
}
