use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Logged action. Estimators only look at actions through the logged
/// densities, except the model-based ones which need finite actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

impl Action {
    pub fn discrete(&self) -> Option<usize> {
        match *self {
            Action::Discrete(a) => Some(a),
            Action::Continuous(_) => None,
        }
    }
}

/// One logged transition `(s_t, a_t, r_t, s_{t+1})` with both policies'
/// densities at `(s_t, a_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
    pub behavior_density: f64,
    pub target_density: f64,
}

impl Step {
    /// `rho_t = pi(a_t|s_t) / mu(a_t|s_t)`.
    #[inline]
    pub fn ratio(&self) -> f64 {
        self.target_density / self.behavior_density
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Episode {
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial_state(&self) -> usize {
        self.steps[0].state
    }

    pub fn total_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// `rho_{0:t}` for every step: the running product of per-step ratios.
pub fn cumulative_ratios(episode: &Episode) -> Vec<f64> {
    let mut acc = 1.0;
    episode
        .steps
        .iter()
        .map(|s| {
            acc *= s.ratio();
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchMeta {
    pub env: String,
    pub seed: u64,
}

/// `n` episodes over a shared state space and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeBatch {
    episodes: Vec<Episode>,
    num_states: usize,
    horizon: usize,
    num_actions: Option<usize>,
    pub meta: BatchMeta,
}

impl EpisodeBatch {
    /// Validates that the batch is nonempty, every episode has length
    /// `horizon`, states are in range and behavior densities are positive.
    pub fn new(episodes: Vec<Episode>, num_states: usize, horizon: usize, num_actions: Option<usize>, meta: BatchMeta) -> Result<Self> {
        if episodes.is_empty() {
            return Err(Error::InvalidArgument("a batch needs at least one episode".into()));
        }
        for (i, ep) in episodes.iter().enumerate() {
            if ep.len() != horizon {
                return Err(Error::ShapeMismatch(alloc::format!("episode {i} has length {}, expected {horizon}", ep.len())));
            }
            for (t, st) in ep.steps.iter().enumerate() {
                if st.state >= num_states || st.next_state >= num_states {
                    return Err(Error::ShapeMismatch(alloc::format!("episode {i} step {t}: state out of range")));
                }
                if !(st.behavior_density > 0.0) {
                    return Err(Error::ZeroBehaviorDensity { step: t, state: st.state });
                }
                if let (Some(na), Action::Discrete(a)) = (num_actions, st.action) {
                    if a >= na {
                        return Err(Error::ShapeMismatch(alloc::format!("episode {i} step {t}: action {a} out of range")));
                    }
                }
                if num_actions.is_some() && st.action.discrete().is_none() {
                    return Err(Error::ShapeMismatch(alloc::format!("episode {i} step {t}: continuous action in a finite-action batch")));
                }
            }
        }
        Ok(Self { episodes, num_states, horizon, num_actions, meta })
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `Some(A)` for finite-action data.
    pub fn num_actions(&self) -> Option<usize> {
        self.num_actions
    }

    /// Sub-batch with the selected episodes, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let eps = indices.iter().map(|&i| self.episodes[i].clone()).collect();
        Self::new(eps, self.num_states, self.horizon, self.num_actions, self.meta.clone())
    }

    /// Relabel every state through `map` (e.g. to hide unobservable states
    /// behind a shared label).
    pub fn map_states(&self, num_states: usize, map: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let episodes = self
            .episodes
            .iter()
            .map(|ep| {
                Episode::new(
                    ep.steps
                        .iter()
                        .enumerate()
                        .map(|(t, st)| Step { state: map(t, st.state), next_state: map(t + 1, st.next_state), ..*st })
                        .collect(),
                )
            })
            .collect();
        Self::new(episodes, num_states, self.horizon, self.num_actions, self.meta.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn step(ratio: f64) -> Step {
        Step { state: 0, action: Action::Discrete(0), reward: 0.0, next_state: 0, behavior_density: 0.5, target_density: 0.5 * ratio }
    }

    #[test]
    fn cumulative_product() {
        let ep = Episode::new(vec![step(2.0), step(0.5), step(2.0)]);
        assert_eq!(cumulative_ratios(&ep), vec![2.0, 1.0, 2.0]);
        let same = Episode::new(vec![step(1.0); 4]);
        assert_eq!(cumulative_ratios(&same), vec![1.0; 4]);
    }

    #[test]
    fn batch_validation() {
        let ep = Episode::new(vec![step(1.0); 3]);
        assert!(EpisodeBatch::new(vec![], 1, 3, Some(1), BatchMeta::default()).is_err());
        assert!(EpisodeBatch::new(vec![ep.clone()], 1, 2, Some(1), BatchMeta::default()).is_err());
        let mut bad = ep.clone();
        bad.steps[1].behavior_density = 0.0;
        assert!(matches!(
            EpisodeBatch::new(vec![bad], 1, 3, Some(1), BatchMeta::default()),
            Err(Error::ZeroBehaviorDensity { step: 1, .. })
        ));
        assert!(EpisodeBatch::new(vec![ep], 1, 3, Some(1), BatchMeta::default()).is_ok());
    }
}
