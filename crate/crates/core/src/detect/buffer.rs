use std::collections::VecDeque;

/// Reward history of one monitored stream since the last restart.
///
/// Keeps running prefix sums next to the raw values so a full GLR scan costs
/// one pass over the split points.
#[derive(Debug, Clone, Default)]
pub struct ObservationBuffer {
    values: VecDeque<f64>,
    // prefix[i] = sum of everything pushed before values[i]; prefix.len() = values.len() + 1
    prefix: VecDeque<f64>,
    max_history: Option<usize>,
}

impl ObservationBuffer {
    pub fn new() -> Self {
        Self::with_max_history(None)
    }

    pub fn with_max_history(max_history: Option<usize>) -> Self {
        let mut prefix = VecDeque::new();
        prefix.push_back(0.0);
        Self {
            values: VecDeque::new(),
            prefix,
            max_history,
        }
    }

    pub fn push(&mut self, x: f64) {
        let last = *self.prefix.back().expect("prefix never empty");
        self.values.push_back(x);
        self.prefix.push_back(last + x);
        if let Some(cap) = self.max_history {
            while self.values.len() > cap {
                self.values.pop_front();
                self.prefix.pop_front();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn clear(&mut self) {
        self.values.clear();
        self.prefix.clear();
        self.prefix.push_back(0.0);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Sum of the first `s` retained observations.
    #[inline]
    pub(crate) fn head_sum(&self, s: usize) -> f64 {
        self.prefix[s] - self.prefix[0]
    }

    pub fn total(&self) -> f64 {
        self.head_sum(self.values.len())
    }

    pub(crate) fn range(&self) -> Option<(f64, f64)> {
        self.values.iter().fold(None, |acc, &x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
    }
}

impl FromIterator<f64> for ObservationBuffer {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut buf = ObservationBuffer::new();
        for x in iter {
            buf.push(x);
        }
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capped_history_drops_oldest() {
        let mut buf = ObservationBuffer::with_max_history(Some(3));
        for x in [1.0, 2.0, 3.0, 4.0, 5.0] {
            buf.push(x);
        }
        assert_eq!(buf.values().collect::<Vec<_>>(), vec![3.0, 4.0, 5.0]);
        assert_eq!(buf.head_sum(1), 3.0);
        assert_eq!(buf.total(), 12.0);
    }

    #[test]
    fn clear_empties() {
        let mut buf: ObservationBuffer = [0.5, 0.25].into_iter().collect();
        assert_eq!(buf.len(), 2);
        buf.clear();
        assert!(buf.is_empty());
        assert_eq!(buf.total(), 0.0);
    }
}
