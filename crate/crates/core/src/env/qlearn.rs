use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::FinitePolicy;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Episodic simulator for tabular Q-learning.
pub trait Dynamics {
    type State: Clone;
    fn num_actions(&self) -> usize;
    fn reset(&self, rng: &mut ChaCha8Rng) -> Self::State;
    /// Next state, reward, and whether the episode terminated.
    fn step(&self, state: &Self::State, action: usize, rng: &mut ChaCha8Rng) -> (Self::State, f64, bool);
}

#[derive(Debug, Clone, PartialEq)]
pub struct QLearningConfig {
    pub episodes: usize,
    /// Initial step size.
    pub step_size: f64,
    /// Episodes after which the step size has halved; it decays as
    /// `step_size / (1 + episode / step_decay)`.
    pub step_decay: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Training episodes are truncated (without a terminal update) here.
    pub max_steps: usize,
    /// Divergence guard on `|Q|`.
    pub value_cap: f64,
    /// Episodes per point of the training curve.
    pub curve_every: usize,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            episodes: 50_000,
            step_size: 0.1,
            step_decay: 50_000.0,
            epsilon: 0.1,
            gamma: 1.0,
            max_steps: 1_000,
            value_cap: 1e6,
            curve_every: 1_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QLearningOutput {
    /// `q[s][a]`.
    pub q: Vec<Vec<f64>>,
    /// Mean training return per block of `curve_every` episodes.
    pub curve: Vec<f64>,
}

/// First action with the largest value.
pub fn greedy_action(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = a;
        }
    }
    best
}

/// Epsilon-greedy tabular Q-learning on the states produced by `index`.
pub fn q_learning<D: Dynamics>(
    dynamics: &D,
    index: impl Fn(&D::State) -> usize,
    num_states: usize,
    config: &QLearningConfig,
    seed: u64,
) -> Result<QLearningOutput> {
    if num_states == 0 || dynamics.num_actions() == 0 {
        return Err(Error::InvalidArgument("Q-learning needs at least one state and action".into()));
    }
    if !(config.step_size > 0.0)
        || !(config.step_decay > 0.0)
        || !(0.0..=1.0).contains(&config.epsilon)
        || !(0.0..=1.0).contains(&config.gamma)
    {
        return Err(Error::InvalidArgument("invalid Q-learning hyperparameters".into()));
    }
    let na = dynamics.num_actions();
    let mut q = vec![vec![0.0; na]; num_states];
    let mut rng = rng_from_seed(seed);
    let block = config.curve_every.max(1);
    let mut curve = Vec::with_capacity(config.episodes / block + 1);
    let mut block_sum = 0.0;
    for episode in 0..config.episodes {
        let alpha = config.step_size / (1.0 + episode as f64 / config.step_decay);
        let mut state = dynamics.reset(&mut rng);
        let mut s = index(&state);
        let mut ret = 0.0;
        for _ in 0..config.max_steps {
            let a = if rng.random::<f64>() < config.epsilon { rng.random_range(0..na) } else { greedy_action(&q[s]) };
            let (next, r, done) = dynamics.step(&state, a, &mut rng);
            ret += r;
            let ns = index(&next);
            if ns >= num_states {
                return Err(Error::InvalidArgument(alloc::format!("state index {ns} out of range")));
            }
            let bootstrap = if done { 0.0 } else { config.gamma * q[ns].iter().copied().fold(f64::NEG_INFINITY, f64::max) };
            let cell = &mut q[s][a];
            *cell += alpha * (r + bootstrap - *cell);
            if !cell.is_finite() || cell.abs() > config.value_cap {
                return Err(Error::Training(alloc::format!("Q value diverged at episode {episode}")));
            }
            if done {
                break;
            }
            state = next;
            s = ns;
        }
        block_sum += ret;
        if (episode + 1) % block == 0 {
            curve.push(block_sum / block as f64);
            block_sum = 0.0;
        }
    }
    Ok(QLearningOutput { q, curve })
}

/// `pi(a|s) ~ exp(Q(s, a) / temperature)`.
pub fn softmax_policy(q: &[Vec<f64>], temperature: f64) -> Result<FinitePolicy> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("temperature {temperature} must be positive")));
    }
    let rows: Vec<Vec<f64>> = q
        .iter()
        .map(|row| {
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = row.iter().map(|&v| Float::exp((v - top) / temperature)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        })
        .collect();
    FinitePolicy::stationary(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Bandit {
        rewards: [f64; 2],
    }

    impl Dynamics for Bandit {
        type State = ();

        fn num_actions(&self) -> usize {
            2
        }

        fn reset(&self, _: &mut ChaCha8Rng) {}

        fn step(&self, _: &(), a: usize, _: &mut ChaCha8Rng) -> ((), f64, bool) {
            ((), self.rewards[a], true)
        }
    }

    #[test]
    fn zero_rewards_stay_at_zero() {
        let out =
            q_learning(&Bandit { rewards: [0.0, 0.0] }, |_| 0, 1, &QLearningConfig { episodes: 2000, ..Default::default() }, 1).unwrap();
        assert!(out.q[0].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn bandit_converges_to_action_means() {
        let out = q_learning(&Bandit { rewards: [0.0, 1.0] }, |_| 0, 1, &QLearningConfig::default(), 2).unwrap();
        assert!((out.q[0][0] - 0.0).abs() < 0.01);
        assert!((out.q[0][1] - 1.0).abs() < 0.01);
        assert_eq!(out.curve.len(), 50);
    }

    #[test]
    fn divergence_guard() {
        let cfg = QLearningConfig { episodes: 1000, step_size: 0.5, value_cap: 10.0, ..Default::default() };
        let err = q_learning(&Bandit { rewards: [100.0, 100.0] }, |_| 0, 1, &cfg, 3).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn softmax_limits() {
        let flat = softmax_policy(&[vec![3.0, 3.0, 3.0]], 1.0).unwrap();
        assert!(flat.row(0, 0).iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        let cold = softmax_policy(&[vec![0.0, 0.1, -1.0]], 1e-3).unwrap();
        assert!(cold.prob(0, 0, 1) >= 0.999);
        let hot = softmax_policy(&[vec![0.0, 5.0, -5.0]], 1e9).unwrap();
        assert!(hot.row(0, 0).iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-6));
        let a = softmax_policy(&[vec![0.3, -1.2, 2.0]], 1.25).unwrap();
        let b = softmax_policy(&[vec![100.3, 98.8, 102.0]], 1.25).unwrap();
        for (x, y) in a.row(0, 0).iter().zip(b.row(0, 0)) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(softmax_policy(&[vec![0.0]], 0.0).is_err());
    }
}
