use std::collections::BTreeSet;

use crate::lime::GoalVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Counts consecutive generations whose front was already seen.
///
/// Fronts are compared as sets of goal vectors rounded to 6 decimals. A novel
/// front is remembered and resets the counter.
#[derive(Debug, Clone)]
pub struct EarlyStop {
    patience: usize,
    counter: usize,
    seen: BTreeSet<Vec<[i64; 3]>>,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        assert!(patience >= 1, "patience must be at least 1");
        Self {
            patience,
            counter: 0,
            seen: BTreeSet::new(),
        }
    }

    pub fn counter(&self) -> usize {
        self.counter
    }

    pub fn fronts_seen(&self) -> usize {
        self.seen.len()
    }

    pub fn check(&mut self, front: &[GoalVector]) -> StopDecision {
        let mut canonical: Vec<[i64; 3]> = front.iter().map(GoalVector::quantized).collect();
        canonical.sort_unstable();
        canonical.dedup();
        if self.seen.contains(&canonical) {
            self.counter += 1;
        } else {
            self.counter = 0;
            self.seen.insert(canonical);
        }
        if self.counter >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}
