//! What a learner sees in one round.

use nalgebra::DVector;

pub type Vector = DVector<f64>;

/// One decision point: the observed context and the candidate actions.
///
/// Candidates are global action ids indexing `features`; policies answer with
/// a position into `candidates`.
#[derive(Debug, Clone, Copy)]
pub struct Round<'a> {
    pub t: usize,
    pub context_id: usize,
    pub context: Option<&'a Vector>,
    pub candidates: &'a [usize],
    pub features: &'a [Vector],
}

impl<'a> Round<'a> {
    pub fn new(t: usize, candidates: &'a [usize], features: &'a [Vector]) -> Self {
        Self {
            t,
            context_id: 0,
            context: None,
            candidates,
            features,
        }
    }

    pub fn with_context(mut self, context_id: usize, context: Option<&'a Vector>) -> Self {
        self.context_id = context_id;
        self.context = context;
        self
    }

    /// Feature vector of the candidate at `pos`.
    pub fn candidate(&self, pos: usize) -> &'a Vector {
        &self.features[self.candidates[pos]]
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position_of(&self, action: usize) -> Option<usize> {
        self.candidates.iter().position(|&a| a == action)
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax([0.5, 0.5]), Some(0));
        assert_eq!(argmax(std::iter::empty()), None);
    }
}
