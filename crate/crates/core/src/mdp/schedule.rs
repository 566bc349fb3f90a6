use alloc::vec::Vec;

use crate::{Error, Result};

/// Which steps reveal the state. Step 0 is always observable; the hidden
/// steps between two observable ones form a gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSchedule {
    observable: Vec<bool>,
}

impl ObservationSchedule {
    pub fn new(observable: Vec<bool>) -> Result<Self> {
        match observable.first() {
            None => Err(Error::InvalidArgument("empty observation schedule".into())),
            Some(false) => Err(Error::InvalidArgument("the first step must be observable".into())),
            Some(true) => Ok(Self { observable }),
        }
    }

    pub fn fully_observed(horizon: usize) -> Result<Self> {
        Self::new(alloc::vec![true; horizon])
    }

    /// Observable every `period` steps, starting at step 0.
    pub fn periodic(horizon: usize, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("period must be positive".into()));
        }
        Self::new((0..horizon).map(|t| t % period == 0).collect())
    }

    pub fn horizon(&self) -> usize {
        self.observable.len()
    }

    pub fn is_observable(&self, t: usize) -> bool {
        self.observable[t]
    }

    /// Indices of observable steps.
    pub fn checkpoints(&self) -> Vec<usize> {
        (0..self.observable.len()).filter(|&t| self.observable[t]).collect()
    }

    /// `[start, end)` step ranges, one per checkpoint: the checkpoint itself
    /// and the hidden steps that follow it.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let cps = self.checkpoints();
        cps.iter().enumerate().map(|(k, &c)| (c, cps.get(k + 1).copied().unwrap_or(self.observable.len()))).collect()
    }

    /// Longest segment length `L`.
    pub fn max_gap(&self) -> usize {
        self.segments().iter().map(|(a, b)| b - a).max().unwrap_or(0)
    }
}
