use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{draw_index, Action, BatchMeta, Episode, EpisodeBatch, FinitePolicy, RewardNoise, Step, TabularMdp};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Anything that can roll out one episode under a behavior policy while
/// logging both policies' densities.
pub trait EpisodeSampler {
    fn num_states(&self) -> usize;
    fn horizon(&self) -> usize;
    /// `None` for continuous actions.
    fn num_actions(&self) -> Option<usize>;
    fn sample_episode_with(&self, rng: &mut ChaCha8Rng) -> Result<Episode>;
}

/// `n` episodes where episode `i` is drawn from its own stream
/// `derive_seed(seed, [i])`. Batches with the same seed therefore share
/// their common prefix whatever `n` is.
pub fn sample_batch<S: EpisodeSampler + ?Sized>(sampler: &S, n: usize, seed: u64, env: &str) -> Result<EpisodeBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let episodes =
        (0..n).map(|i| sampler.sample_episode_with(&mut rng_from_seed(derive_seed(seed, &[i as u64])))).collect::<Result<Vec<_>>>()?;
    EpisodeBatch::new(episodes, sampler.num_states(), sampler.horizon(), sampler.num_actions(), BatchMeta { env: String::from(env), seed })
}

/// Tabular MDP rolled out under `behavior`, with `target` densities logged.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSampler {
    mdp: TabularMdp,
    behavior: FinitePolicy,
    target: FinitePolicy,
    ratio_bound: f64,
}

impl TabularSampler {
    /// Fails if the policies do not match the model or the behavior policy
    /// misses an action the target can take.
    pub fn new(mdp: TabularMdp, behavior: FinitePolicy, target: FinitePolicy) -> Result<Self> {
        behavior.check_shape(mdp.num_states(), mdp.num_actions())?;
        target.check_shape(mdp.num_states(), mdp.num_actions())?;
        let ratio_bound = FinitePolicy::max_ratio(&target, &behavior, mdp.horizon())?;
        Ok(Self { mdp, behavior, target, ratio_bound })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn behavior(&self) -> &FinitePolicy {
        &self.behavior
    }

    pub fn target(&self) -> &FinitePolicy {
        &self.target
    }

    pub fn ratio_bound(&self) -> f64 {
        self.ratio_bound
    }
}

impl EpisodeSampler for TabularSampler {
    fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    fn horizon(&self) -> usize {
        self.mdp.horizon()
    }

    fn num_actions(&self) -> Option<usize> {
        Some(self.mdp.num_actions())
    }

    fn sample_episode_with(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        let mdp = &self.mdp;
        let mut steps = Vec::with_capacity(mdp.horizon());
        let mut s = draw_index(mdp.initial(), rng.random());
        for t in 0..mdp.horizon() {
            let a = draw_index(self.behavior.row(t, s), rng.random());
            let mu = self.behavior.prob(t, s, a);
            if !(mu > 0.0) {
                return Err(Error::ZeroBehaviorDensity { step: t, state: s });
            }
            let pi = self.target.prob(t, s, a);
            let ratio = pi / mu;
            if ratio > self.ratio_bound * (1.0 + 1e-12) {
                return Err(Error::RatioBound { ratio, bound: self.ratio_bound });
            }
            let next = draw_index(mdp.transition(t, s, a), rng.random());
            let mut reward = mdp.reward(t, s, a)[next];
            if let RewardNoise::Uniform { half_width } = mdp.noise() {
                reward += half_width * (2.0 * rng.random::<f64>() - 1.0);
            }
            steps.push(Step { state: s, action: Action::Discrete(a), reward, next_state: next, behavior_density: mu, target_density: pi });
            s = next;
        }
        Ok(Episode::new(steps))
    }
}

/// One episode of `mdp` under `behavior`, seeded by `seed`.
pub fn sample_episode(mdp: &TabularMdp, behavior: &FinitePolicy, target: &FinitePolicy, seed: u64) -> Result<Episode> {
    let sampler = TabularSampler::new(mdp.clone(), behavior.clone(), target.clone())?;
    sampler.sample_episode_with(&mut rng_from_seed(seed))
}
