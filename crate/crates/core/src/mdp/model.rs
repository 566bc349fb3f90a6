use alloc::format;
use alloc::vec::Vec;

use super::check_simplex;
use crate::{Error, Result};

/// Declared range of per-step rewards. Every reward mean (and every noisy
/// reward) lies in `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBounds {
    pub min: f64,
    pub max: f64,
}

impl RewardBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min <= max) {
            return Err(Error::InvalidModel(format!("reward bounds [{min}, {max}] are not a finite interval")));
        }
        Ok(Self { min, max })
    }

    /// `[0, r_max]`.
    pub fn nonnegative(r_max: f64) -> Result<Self> {
        Self::new(0.0, r_max)
    }

    /// Largest reward magnitude.
    pub fn magnitude(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }

    /// Range of total returns over `horizon` steps.
    pub fn return_range(&self, horizon: usize) -> (f64, f64) {
        let h = horizon as f64;
        (h * self.min, h * self.max)
    }
}

/// Additive reward noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RewardNoise {
    #[default]
    None,
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

impl RewardNoise {
    pub fn variance(&self) -> f64 {
        match *self {
            RewardNoise::None => 0.0,
            RewardNoise::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    pub fn half_width(&self) -> f64 {
        match *self {
            RewardNoise::None => 0.0,
            RewardNoise::Uniform { half_width } => half_width,
        }
    }
}

/// Nonstationary finite MDP with horizon `H`.
///
/// Transition and reward tables are stored flat in `[t][s][a][s']` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    bounds: RewardBounds,
    noise: RewardNoise,
}

impl TabularMdp {
    /// Build and validate a model from flat `[t][s][a][s']` tables.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial: Vec<f64>,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        bounds: RewardBounds,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidModel(format!("dimensions must be positive (S={num_states}, A={num_actions}, H={horizon})")));
        }
        let len = horizon * num_states * num_actions * num_states;
        if initial.len() != num_states {
            return Err(Error::ShapeMismatch(format!("initial distribution has {} entries, expected {num_states}", initial.len())));
        }
        if transitions.len() != len || rewards.len() != len {
            return Err(Error::ShapeMismatch(format!("tables have {} / {} entries, expected {len}", transitions.len(), rewards.len())));
        }
        check_simplex(&initial, || "initial distribution".into())?;
        for (k, row) in transitions.chunks(num_states).enumerate() {
            check_simplex(row, || {
                let t = k / (num_states * num_actions);
                let s = (k / num_actions) % num_states;
                let a = k % num_actions;
                format!("transition row t={t} s={s} a={a}")
            })?;
        }
        for (k, &r) in rewards.iter().enumerate() {
            if !(r >= bounds.min && r <= bounds.max) {
                return Err(Error::InvalidModel(format!("reward entry {k} = {r} outside [{}, {}]", bounds.min, bounds.max)));
            }
        }
        Ok(Self { num_states, num_actions, horizon, initial, transitions, rewards, bounds, noise: RewardNoise::None })
    }

    /// Time-invariant model: `transitions` and `rewards` are `[s][a][s']`
    /// tables broadcast over all `horizon` steps.
    pub fn stationary(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial: Vec<f64>,
        transitions: &[f64],
        rewards: &[f64],
        bounds: RewardBounds,
    ) -> Result<Self> {
        let block = num_states * num_actions * num_states;
        if transitions.len() != block || rewards.len() != block {
            return Err(Error::ShapeMismatch(format!("stationary tables must have {block} entries")));
        }
        let mut t_all = Vec::with_capacity(block * horizon);
        let mut r_all = Vec::with_capacity(block * horizon);
        for _ in 0..horizon {
            t_all.extend_from_slice(transitions);
            r_all.extend_from_slice(rewards);
        }
        Self::new(num_states, num_actions, horizon, initial, t_all, r_all, bounds)
    }

    /// Attach additive reward noise. Noisy rewards must stay inside the
    /// declared bounds.
    pub fn with_noise(mut self, noise: RewardNoise) -> Result<Self> {
        let c = noise.half_width();
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidModel(format!("noise half width {c} is invalid")));
        }
        let (lo, hi) = self.rewards.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        if lo - c < self.bounds.min || hi + c > self.bounds.max {
            return Err(Error::InvalidModel(format!(
                "noise of half width {c} pushes rewards outside [{}, {}]",
                self.bounds.min, self.bounds.max
            )));
        }
        self.noise = noise;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn bounds(&self) -> RewardBounds {
        self.bounds
    }

    pub fn noise(&self) -> RewardNoise {
        self.noise
    }

    #[inline]
    fn offset(&self, t: usize, s: usize, a: usize) -> usize {
        ((t * self.num_states + s) * self.num_actions + a) * self.num_states
    }

    /// `T_t(. | s, a)`.
    #[inline]
    pub fn transition(&self, t: usize, s: usize, a: usize) -> &[f64] {
        let o = self.offset(t, s, a);
        &self.transitions[o..o + self.num_states]
    }

    /// `r_t(s, a, .)`, the reward means for each next state.
    #[inline]
    pub fn reward(&self, t: usize, s: usize, a: usize) -> &[f64] {
        let o = self.offset(t, s, a);
        &self.rewards[o..o + self.num_states]
    }

    /// `r_t(s, a) = sum_s' T_t(s'|s,a) r_t(s,a,s')`.
    pub fn expected_reward(&self, t: usize, s: usize, a: usize) -> f64 {
        self.transition(t, s, a).iter().zip(self.reward(t, s, a)).map(|(p, r)| p * r).sum()
    }

    pub fn transitions_flat(&self) -> &[f64] {
        &self.transitions
    }

    pub fn rewards_flat(&self) -> &[f64] {
        &self.rewards
    }

    /// True when every step shares the step-0 tables.
    pub fn is_stationary(&self) -> bool {
        let block = self.num_states * self.num_actions * self.num_states;
        (1..self.horizon).all(|t| {
            self.transitions[t * block..(t + 1) * block] == self.transitions[..block]
                && self.rewards[t * block..(t + 1) * block] == self.rewards[..block]
        })
    }

    /// Same dynamics with a different horizon. Only defined for stationary
    /// models.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if !self.is_stationary() {
            return Err(Error::InvalidModel("horizon can only be changed on a stationary model".into()));
        }
        let block = self.num_states * self.num_actions * self.num_states;
        let mdp = Self::stationary(
            self.num_states,
            self.num_actions,
            horizon,
            self.initial.clone(),
            &self.transitions[..block],
            &self.rewards[..block],
            self.bounds,
        )?;
        mdp.with_noise(self.noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_stochastic_rows() {
        let err =
            TabularMdp::stationary(2, 1, 3, vec![1.0, 0.0], &[0.5, 0.4, 0.0, 1.0], &[0.0; 4], RewardBounds::nonnegative(1.0).unwrap())
                .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn rejects_rewards_outside_bounds() {
        let err = TabularMdp::stationary(1, 1, 1, vec![1.0], &[1.0], &[2.0], RewardBounds::nonnegative(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn stationary_broadcast_and_expected_reward() {
        let mdp = TabularMdp::stationary(
            2,
            1,
            4,
            vec![1.0, 0.0],
            &[0.25, 0.75, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            RewardBounds::nonnegative(1.0).unwrap(),
        )
        .unwrap();
        assert!(mdp.is_stationary());
        assert_eq!(mdp.transition(3, 0, 0), &[0.25, 0.75]);
        assert_eq!(mdp.expected_reward(2, 0, 0), 0.25);
        assert_eq!(mdp.with_horizon(9).unwrap().horizon(), 9);
    }

    #[test]
    fn noise_must_respect_bounds() {
        let mdp = TabularMdp::stationary(1, 1, 2, vec![1.0], &[1.0], &[0.5], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        assert!(mdp.clone().with_noise(RewardNoise::Uniform { half_width: 0.5 }).is_ok());
        assert!(mdp.with_noise(RewardNoise::Uniform { half_width: 0.6 }).is_err());
        assert!((RewardNoise::Uniform { half_width: 0.3 }.variance() - 0.03).abs() < 1e-15);
    }
}
