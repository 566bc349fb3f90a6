use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{BenchmarkBundle, EnvId, ExactModel, Oracle, OracleProvenance, Sampler};
use crate::mdp::{
    Action, ContinuousPolicy, DensityPolicyPair, Episode, EpisodeSampler, FinitePolicy, PiecewiseDensity, RewardBounds, Step, TabularMdp,
};
use crate::{Error, Result};

/// Two-state chain with a sinking state 0 and continuous actions in
/// `[0, 1]`. The episode starts in state 1; each step a hidden interval of
/// width `1/H` is placed inside `[0, 0.5]` and the chain sinks iff the
/// action lands in it. A reward of 1 is paid for every step `t >= ceil(H/2)`
/// (1-based) that starts in state 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSampler {
    horizon: usize,
    pair: DensityPolicyPair,
}

impl ChainSampler {
    pub fn pair(&self) -> &DensityPolicyPair {
        &self.pair
    }

    fn pays(&self, t: usize) -> bool {
        t + 1 >= self.horizon.div_ceil(2)
    }
}

impl EpisodeSampler for ChainSampler {
    fn num_states(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn num_actions(&self) -> Option<usize> {
        None
    }

    fn sample_episode_with(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        let h = self.horizon as f64;
        let half_width = 0.5 / h;
        let mut s = 1;
        let mut steps = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let a = self.pair.behavior().state(s).sample(rng);
            let mu = self.pair.behavior().density(s, a);
            if !(mu > 0.0) {
                return Err(Error::ZeroBehaviorDensity { step: t, state: s });
            }
            let next = if s == 1 {
                let centre = half_width + (0.5 - 2.0 * half_width) * rng.random::<f64>();
                if (a - centre).abs() <= half_width {
                    0
                } else {
                    1
                }
            } else {
                0
            };
            let reward = if s == 0 && self.pays(t) { 1.0 } else { 0.0 };
            steps.push(Step {
                state: s,
                action: Action::Continuous(a),
                reward,
                next_state: next,
                behavior_density: mu,
                target_density: self.pair.target().density(s, a),
            });
            s = next;
        }
        Ok(Episode::new(steps))
    }
}

/// The chain with the target density 1.9 on `[0, 0.5]` and 0.1 above.
pub fn time_varying_chain(horizon: usize) -> Result<BenchmarkBundle> {
    time_varying_chain_with_density(horizon, 1.9)
}

/// Target density `low` on `[0, 0.5]` and `2 - low` on `(0.5, 1]`; the
/// behavior policy is uniform. `low = 1` makes the two policies equal.
pub fn time_varying_chain_with_density(horizon: usize, low: f64) -> Result<BenchmarkBundle> {
    if horizon < 4 {
        return Err(Error::InvalidArgument(alloc::format!("horizon {horizon} is below 4")));
    }
    if !(low > 0.0 && low < 2.0) {
        return Err(Error::InvalidArgument(alloc::format!("target density {low} outside (0, 2)")));
    }
    let uniform = PiecewiseDensity::uniform(0.0, 1.0)?;
    let skewed = PiecewiseDensity::new(vec![0.0, 0.5, 1.0], vec![low, 2.0 - low])?;
    let pair = DensityPolicyPair::new(
        ContinuousPolicy::new(vec![uniform.clone(), uniform.clone()])?,
        ContinuousPolicy::new(vec![uniform, skewed])?,
    )?;
    let sampler = ChainSampler { horizon, pair };
    let exact = reduced_model(horizon, low)?;
    Ok(BenchmarkBundle {
        id: EnvId::TimeVaryingChain,
        sampler: Sampler::Chain(sampler),
        schedule: None,
        oracle: Oracle { value: closed_form_value(horizon, low), provenance: OracleProvenance::ClosedForm },
        bounds: RewardBounds::nonnegative(1.0)?,
        exact: Some(exact),
        mask: None,
        estimation_target: None,
    })
}

/// `sum_{t = ceil(H/2)}^{H} (1 - (1 - low/H)^(t-1))`.
fn closed_form_value(horizon: usize, low: f64) -> f64 {
    let stay = 1.0 - low / horizon as f64;
    (horizon.div_ceil(2)..=horizon).map(|t| 1.0 - Float::powi(stay, t as i32 - 1)).sum()
}

/// Exact finite reduction with three action classes at state 1: inside the
/// interval, elsewhere in `[0, 0.5]`, and in `(0.5, 1]`. At state 0 the
/// action is irrelevant and both policies use the same uniform pmf.
fn reduced_model(horizon: usize, low: f64) -> Result<ExactModel> {
    let h = horizon as f64;
    let (ns, na) = (2, 3);
    let pays_from = horizon.div_ceil(2);
    let mut transitions = Vec::with_capacity(horizon * ns * na * ns);
    let mut rewards = Vec::with_capacity(horizon * ns * na * ns);
    for t in 0..horizon {
        let r = if t + 1 >= pays_from { 1.0 } else { 0.0 };
        for _ in 0..na {
            transitions.extend_from_slice(&[1.0, 0.0]);
            rewards.extend_from_slice(&[r, r]);
        }
        transitions.extend_from_slice(&[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        rewards.extend_from_slice(&[0.0; 6]);
    }
    let mdp = TabularMdp::new(ns, na, horizon, vec![0.0, 1.0], transitions, rewards, RewardBounds::nonnegative(1.0)?)?;
    let third = vec![1.0 / 3.0; 3];
    let behavior = FinitePolicy::stationary(&[third.clone(), vec![1.0 / h, 0.5 - 1.0 / h, 0.5]])?;
    let target = FinitePolicy::stationary(&[third, vec![low / h, low * (0.5 - 1.0 / h), 0.5 * (2.0 - low)]])?;
    Ok(ExactModel { mdp, target, behavior })
}
