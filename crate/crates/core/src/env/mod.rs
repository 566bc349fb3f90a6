//! The four benchmark environments with their policy pairs, observation
//! schedules and ground-truth values.

mod chain;
mod model_win;
mod mountain_car;
mod qlearn;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::ChaCha8Rng;

pub use chain::{time_varying_chain, time_varying_chain_with_density, ChainSampler};
pub use model_win::{model_fail, model_win};
pub use mountain_car::{mountain_car, MountainCar, MountainCarConfig, MountainCarSampler, MountainCarState, StateGrid};
pub use qlearn::{greedy_action, q_learning, softmax_policy, Dynamics, QLearningConfig, QLearningOutput};

use crate::estimators::MisOptions;
use crate::mdp::{
    sample_batch, Episode, EpisodeBatch, EpisodeSampler, FinitePolicy, ObservationSchedule, RewardBounds, TabularMdp, TabularSampler,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvId {
    ModelWin,
    ModelFail,
    TimeVaryingChain,
    MountainCar,
}

impl EnvId {
    pub const ALL: [EnvId; 4] = [EnvId::ModelWin, EnvId::ModelFail, EnvId::TimeVaryingChain, EnvId::MountainCar];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvId::ModelWin => "model-win",
            EnvId::ModelFail => "model-fail",
            EnvId::TimeVaryingChain => "time-varying-chain",
            EnvId::MountainCar => "mountain-car",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown environment id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleProvenance {
    ExactDp,
    ClosedForm,
    MonteCarlo { episodes: usize, standard_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle {
    pub value: f64,
    pub provenance: OracleProvenance,
}

impl Oracle {
    /// Zero for exact oracles.
    pub fn standard_error(&self) -> f64 {
        match self.provenance {
            OracleProvenance::MonteCarlo { standard_error, .. } => standard_error,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Sampler {
    Tabular(TabularSampler),
    Chain(ChainSampler),
    MountainCar(MountainCarSampler),
}

impl EpisodeSampler for Sampler {
    fn num_states(&self) -> usize {
        match self {
            Sampler::Tabular(s) => s.num_states(),
            Sampler::Chain(s) => s.num_states(),
            Sampler::MountainCar(s) => s.num_states(),
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Sampler::Tabular(s) => s.horizon(),
            Sampler::Chain(s) => s.horizon(),
            Sampler::MountainCar(s) => s.horizon(),
        }
    }

    fn num_actions(&self) -> Option<usize> {
        match self {
            Sampler::Tabular(s) => s.num_actions(),
            Sampler::Chain(s) => s.num_actions(),
            Sampler::MountainCar(s) => s.num_actions(),
        }
    }

    fn sample_episode_with(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        match self {
            Sampler::Tabular(s) => s.sample_episode_with(rng),
            Sampler::Chain(s) => s.sample_episode_with(rng),
            Sampler::MountainCar(s) => s.sample_episode_with(rng),
        }
    }
}

/// Finite model with both policies, exact where the sampler is, or an
/// exact reduction of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub mdp: TabularMdp,
    pub target: FinitePolicy,
    pub behavior: FinitePolicy,
}

/// Relabels true states into what the logger reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMask {
    pub num_observed: usize,
    /// `map[s]` is the reported id of true state `s`.
    pub map: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkBundle {
    pub id: EnvId,
    pub sampler: Sampler,
    pub schedule: Option<ObservationSchedule>,
    pub oracle: Oracle,
    pub bounds: RewardBounds,
    pub exact: Option<ExactModel>,
    pub mask: Option<StateMask>,
    /// Target policy over the reported states, for model-based estimators.
    /// `None` with continuous actions.
    pub estimation_target: Option<FinitePolicy>,
}

impl BenchmarkBundle {
    pub fn horizon(&self) -> usize {
        self.sampler.horizon()
    }

    /// Logged batch as estimators see it, with the state mask applied.
    pub fn sample(&self, n: usize, seed: u64) -> Result<EpisodeBatch> {
        let batch = self.sample_unmasked(n, seed)?;
        match &self.mask {
            Some(mask) => batch.map_states(mask.num_observed, |_, s| mask.map[s]),
            None => Ok(batch),
        }
    }

    /// Logged batch with true state labels.
    pub fn sample_unmasked(&self, n: usize, seed: u64) -> Result<EpisodeBatch> {
        sample_batch(&self.sampler, n, seed, self.id.as_str())
    }

    /// MIS options suited to the environment: self-normalized, reward table
    /// when actions are finite, and the observation schedule if any.
    pub fn mis_options(&self) -> MisOptions {
        MisOptions { self_normalize: true, reward_table: self.sampler.num_actions().is_some(), schedule: self.schedule.clone() }
    }
}
