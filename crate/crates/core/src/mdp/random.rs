use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FinitePolicy, RewardBounds, TabularMdp};
use crate::rng::rng_from_seed;
use crate::Result;

/// Random pmf where each entry is dropped with probability `sparsity`
/// (at least one survives) and the rest are uniform weights.
fn random_pmf(rng: &mut ChaCha8Rng, len: usize, sparsity: f64, floor: f64) -> Vec<f64> {
    let keep = rng.random_range(0..len);
    let mut w: Vec<f64> =
        (0..len).map(|i| if i != keep && rng.random::<f64>() < sparsity { 0.0 } else { floor + rng.random::<f64>() }).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Nonstationary MDP with sparse random transitions and rewards in
/// `[0, 1]`, for property tests and benchmarks.
pub fn random_mdp(num_states: usize, num_actions: usize, horizon: usize, seed: u64) -> Result<TabularMdp> {
    let mut rng = rng_from_seed(seed);
    let initial = random_pmf(&mut rng, num_states, 0.5, 0.0);
    let rows = horizon * num_states * num_actions;
    let mut transitions = Vec::with_capacity(rows * num_states);
    let mut rewards = Vec::with_capacity(rows * num_states);
    for _ in 0..rows {
        transitions.extend(random_pmf(&mut rng, num_states, 0.3, 0.0));
        rewards.extend((0..num_states).map(|_| rng.random::<f64>()));
    }
    TabularMdp::new(num_states, num_actions, horizon, initial, transitions, rewards, RewardBounds::nonnegative(1.0)?)
}

/// Nonstationary policy over `steps` steps with every action probability
/// bounded away from zero, so it covers any target.
pub fn random_policy(num_states: usize, num_actions: usize, steps: usize, seed: u64) -> Result<FinitePolicy> {
    let mut rng = rng_from_seed(seed);
    let tables: Vec<Vec<Vec<f64>>> =
        (0..steps).map(|_| (0..num_states).map(|_| random_pmf(&mut rng, num_actions, 0.0, 0.2)).collect()).collect();
    FinitePolicy::nonstationary(&tables)
}
