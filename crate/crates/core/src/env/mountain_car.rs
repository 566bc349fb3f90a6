use alloc::vec::Vec;
use num_traits::Float;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::qlearn::{greedy_action, q_learning, softmax_policy, Dynamics, QLearningConfig};
use super::{BenchmarkBundle, EnvId, Oracle, OracleProvenance, Sampler};
use crate::mdp::{draw_index, Action, Episode, EpisodeSampler, FinitePolicy, RewardBounds, Step};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

const MIN_POS: f64 = -1.2;
const GOAL_POS: f64 = 0.5;
const MAX_SPEED: f64 = 0.07;

/// Textbook mountain car: three actions (reverse, coast, forward), reward
/// `-1` per step until the goal is reached.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MountainCar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
    pub at_goal: bool,
}

impl MountainCar {
    /// Position uniform over the valley, velocity 0.
    pub fn initial_state<R: Rng + ?Sized>(rng: &mut R) -> MountainCarState {
        MountainCarState { position: MIN_POS + (GOAL_POS - MIN_POS) * rng.random::<f64>(), velocity: 0.0, at_goal: false }
    }

    pub fn advance(state: &MountainCarState, action: usize) -> (MountainCarState, f64) {
        if state.at_goal {
            return (*state, 0.0);
        }
        let force = action as f64 - 1.0;
        let mut v = (state.velocity + 0.001 * force - 0.0025 * Float::cos(3.0 * state.position)).clamp(-MAX_SPEED, MAX_SPEED);
        let mut x = state.position + v;
        if x < MIN_POS {
            x = MIN_POS;
            v = 0.0;
        }
        (MountainCarState { position: x, velocity: v, at_goal: x >= GOAL_POS }, -1.0)
    }
}

impl Dynamics for MountainCar {
    type State = MountainCarState;

    fn num_actions(&self) -> usize {
        3
    }

    fn reset(&self, rng: &mut ChaCha8Rng) -> MountainCarState {
        Self::initial_state(rng)
    }

    fn step(&self, state: &MountainCarState, action: usize, _: &mut ChaCha8Rng) -> (MountainCarState, f64, bool) {
        let (next, r) = Self::advance(state, action);
        (next, r, next.at_goal)
    }
}

/// Rounds `position * 2^6` and `velocity * 2^8` to integers and packs them
/// into one id; the goal gets its own id after the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateGrid {
    pos_lo: i64,
    pos_cells: usize,
    vel_lo: i64,
    vel_cells: usize,
}

impl Default for StateGrid {
    fn default() -> Self {
        let pos_lo = Float::round(MIN_POS * 64.0) as i64;
        let pos_hi = Float::round(GOAL_POS * 64.0) as i64;
        let vel_hi = Float::round(MAX_SPEED * 256.0) as i64;
        Self { pos_lo, pos_cells: (pos_hi - pos_lo + 1) as usize, vel_lo: -vel_hi, vel_cells: (2 * vel_hi + 1) as usize }
    }
}

impl StateGrid {
    pub fn num_states(&self) -> usize {
        self.pos_cells * self.vel_cells + 1
    }

    pub fn goal(&self) -> usize {
        self.pos_cells * self.vel_cells
    }

    pub fn index(&self, s: &MountainCarState) -> usize {
        if s.at_goal {
            return self.goal();
        }
        let p = (Float::round(s.position * 64.0) as i64 - self.pos_lo).clamp(0, self.pos_cells as i64 - 1) as usize;
        let v = (Float::round(s.velocity * 256.0) as i64 - self.vel_lo).clamp(0, self.vel_cells as i64 - 1) as usize;
        p * self.vel_cells + v
    }
}

/// Mountain car logged on the state grid. Policies are tables over grid
/// ids; the dynamics underneath stay continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarSampler {
    grid: StateGrid,
    horizon: usize,
    behavior: FinitePolicy,
    target: FinitePolicy,
}

impl MountainCarSampler {
    pub fn behavior(&self) -> &FinitePolicy {
        &self.behavior
    }

    pub fn target(&self) -> &FinitePolicy {
        &self.target
    }

    pub fn grid(&self) -> StateGrid {
        self.grid
    }

    /// Return of one on-policy rollout of the target policy.
    pub fn target_return(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut state = MountainCar::initial_state(rng);
        let mut total = 0.0;
        for _ in 0..self.horizon {
            let a = draw_index(self.target.row(0, self.grid.index(&state)), rng.random());
            let (next, r) = MountainCar::advance(&state, a);
            total += r;
            state = next;
        }
        total
    }
}

impl EpisodeSampler for MountainCarSampler {
    fn num_states(&self) -> usize {
        self.grid.num_states()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn num_actions(&self) -> Option<usize> {
        Some(3)
    }

    fn sample_episode_with(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        let mut state = MountainCar::initial_state(rng);
        let mut steps = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let s = self.grid.index(&state);
            let a = draw_index(self.behavior.row(0, s), rng.random());
            let mu = self.behavior.prob(0, s, a);
            if !(mu > 0.0) {
                return Err(Error::ZeroBehaviorDensity { step: t, state: s });
            }
            let (next, reward) = MountainCar::advance(&state, a);
            steps.push(Step {
                state: s,
                action: Action::Discrete(a),
                reward,
                next_state: self.grid.index(&next),
                behavior_density: mu,
                target_density: self.target.prob(0, s, a),
            });
            state = next;
        }
        Ok(Episode::new(steps))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarConfig {
    pub horizon: usize,
    pub train_seed: u64,
    pub q_learning: QLearningConfig,
    pub target_temperature: f64,
    pub behavior_temperature: f64,
    pub oracle_episodes: usize,
    pub oracle_seed: u64,
    /// Greedy evaluation rollouts from starts in `[-0.6, -0.4]`.
    pub eval_runs: usize,
    pub eval_horizon: usize,
    /// Fraction of evaluation rollouts that must reach the goal.
    pub min_success: f64,
}

impl Default for MountainCarConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            train_seed: 0,
            q_learning: QLearningConfig::default(),
            target_temperature: 1.0,
            behavior_temperature: 1.25,
            oracle_episodes: 100_000,
            oracle_seed: 1,
            eval_runs: 100,
            eval_horizon: 200,
            min_success: 0.95,
        }
    }
}

fn greedy_success_rate(q: &[Vec<f64>], grid: &StateGrid, cfg: &MountainCarConfig) -> f64 {
    let mut rng = rng_from_seed(derive_seed(cfg.train_seed, &[u64::MAX]));
    let mut reached = 0usize;
    for _ in 0..cfg.eval_runs {
        let mut state = MountainCarState { position: -0.6 + 0.2 * rng.random::<f64>(), velocity: 0.0, at_goal: false };
        for _ in 0..cfg.eval_horizon {
            state = MountainCar::advance(&state, greedy_action(&q[grid.index(&state)])).0;
            if state.at_goal {
                reached += 1;
                break;
            }
        }
    }
    reached as f64 / cfg.eval_runs.max(1) as f64
}

/// Train Q on the grid, derive the softmax policy pair and estimate the
/// target value by on-policy Monte Carlo.
pub fn mountain_car(cfg: &MountainCarConfig) -> Result<BenchmarkBundle> {
    if cfg.horizon == 0 || cfg.oracle_episodes < 2 {
        return Err(Error::InvalidArgument("mountain car needs a positive horizon and at least two oracle episodes".into()));
    }
    let grid = StateGrid::default();
    let trained = q_learning(&MountainCar, |s| grid.index(s), grid.num_states(), &cfg.q_learning, cfg.train_seed)?;
    let rate = greedy_success_rate(&trained.q, &grid, cfg);
    if rate < cfg.min_success {
        return Err(Error::Training(alloc::format!("greedy policy reached the goal in {:.1}% of evaluation runs", 100.0 * rate)));
    }
    let sampler = MountainCarSampler {
        grid,
        horizon: cfg.horizon,
        behavior: softmax_policy(&trained.q, cfg.behavior_temperature)?,
        target: softmax_policy(&trained.q, cfg.target_temperature)?,
    };
    // The ratio bound is finite by construction; this also checks coverage.
    FinitePolicy::max_ratio(&sampler.target, &sampler.behavior, 1)?;

    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..cfg.oracle_episodes {
        let g = sampler.target_return(&mut rng_from_seed(derive_seed(cfg.oracle_seed, &[i as u64])));
        sum += g;
        sum_sq += g * g;
    }
    let m = cfg.oracle_episodes as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    let oracle = Oracle {
        value: mean,
        provenance: OracleProvenance::MonteCarlo { episodes: cfg.oracle_episodes, standard_error: Float::sqrt(var / m) },
    };
    Ok(BenchmarkBundle {
        id: EnvId::MountainCar,
        estimation_target: Some(sampler.target.clone()),
        sampler: Sampler::MountainCar(sampler),
        schedule: None,
        oracle,
        bounds: RewardBounds::new(-1.0, 0.0)?,
        exact: None,
        mask: None,
    })
}
