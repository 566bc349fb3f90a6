//! Declarative experiment configuration (JSON).

use std::path::{Path, PathBuf};

use mis_ope_core::env::{MountainCarConfig, QLearningConfig};
use mis_ope_core::estimators::EstimatorId;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn default_replications() -> usize {
    128
}

fn default_attrition() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    RelativeRmse,
    Rmse,
    Bias,
    Variance,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::RelativeRmse => "relative-rmse",
            Metric::Rmse => "rmse",
            Metric::Bias => "bias",
            Metric::Variance => "variance",
        }
    }
}

fn p_win() -> f64 {
    0.4
}

fn p_fail() -> f64 {
    1.0
}

fn chain_density() -> f64 {
    1.9
}

/// Environment id plus its parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvConfig {
    ModelWin {
        #[serde(default = "p_win")]
        p: f64,
    },
    ModelFail {
        #[serde(default = "p_fail")]
        p: f64,
    },
    TimeVaryingChain {
        /// Target density on `[0, 0.5]`.
        #[serde(default = "chain_density")]
        target_density: f64,
    },
    MountainCar(MountainCarParams),
}

impl EnvConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EnvConfig::ModelWin { .. } => "model-win",
            EnvConfig::ModelFail { .. } => "model-fail",
            EnvConfig::TimeVaryingChain { .. } => "time-varying-chain",
            EnvConfig::MountainCar(_) => "mountain-car",
        }
    }
}

/// Mountain-car training and oracle settings. The horizon comes from the
/// experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainCarParams {
    pub train_seed: u64,
    pub episodes: usize,
    pub step_size: f64,
    pub step_decay: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub max_steps: usize,
    pub target_temperature: f64,
    pub behavior_temperature: f64,
    pub oracle_episodes: usize,
    pub oracle_seed: u64,
}

impl Default for MountainCarParams {
    fn default() -> Self {
        let mc = MountainCarConfig::default();
        let q = mc.q_learning;
        Self {
            train_seed: mc.train_seed,
            episodes: q.episodes,
            step_size: q.step_size,
            step_decay: q.step_decay,
            epsilon: q.epsilon,
            gamma: q.gamma,
            max_steps: q.max_steps,
            target_temperature: mc.target_temperature,
            behavior_temperature: mc.behavior_temperature,
            oracle_episodes: mc.oracle_episodes,
            oracle_seed: mc.oracle_seed,
        }
    }
}

impl MountainCarParams {
    pub fn to_core(&self, horizon: usize) -> MountainCarConfig {
        MountainCarConfig {
            horizon,
            train_seed: self.train_seed,
            q_learning: QLearningConfig {
                episodes: self.episodes,
                step_size: self.step_size,
                step_decay: self.step_decay,
                epsilon: self.epsilon,
                gamma: self.gamma,
                max_steps: self.max_steps,
                ..QLearningConfig::default()
            },
            target_temperature: self.target_temperature,
            behavior_temperature: self.behavior_temperature,
            oracle_episodes: self.oracle_episodes,
            oracle_seed: self.oracle_seed,
            ..MountainCarConfig::default()
        }
    }
}

/// An estimator id, optionally with MIS-family overrides. A bare string is
/// accepted as shorthand for `{"id": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "EstimatorEntry", into = "EstimatorEntry")]
pub struct EstimatorSpec {
    pub id: EstimatorId,
    /// Column label; defaults to the id.
    pub label: String,
    pub self_normalize: Option<bool>,
    pub reward_table: Option<bool>,
    /// Use the environment's observation schedule (MIS only, default true).
    pub use_schedule: Option<bool>,
    id_error: Option<String>,
}

impl EstimatorSpec {
    pub fn new(id: EstimatorId) -> Self {
        Self { id, label: id.as_str().to_string(), self_normalize: None, reward_table: None, use_schedule: None, id_error: None }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EstimatorEntry {
    Bare(String),
    Full {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        self_normalize: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reward_table: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        use_schedule: Option<bool>,
    },
}

impl From<EstimatorEntry> for EstimatorSpec {
    fn from(e: EstimatorEntry) -> Self {
        let (id, label, self_normalize, reward_table, use_schedule) = match e {
            EstimatorEntry::Bare(id) => (id, None, None, None, None),
            EstimatorEntry::Full { id, label, self_normalize, reward_table, use_schedule } => {
                (id, label, self_normalize, reward_table, use_schedule)
            }
        };
        // Unknown ids are reported by `ExperimentConfig::validate` so the
        // message can list the valid ones.
        let (parsed, id_error) = match id.parse::<EstimatorId>() {
            Ok(p) => (p, None),
            Err(_) => (EstimatorId::Is, Some(id.clone())),
        };
        Self { id: parsed, label: label.unwrap_or(id), self_normalize, reward_table, use_schedule, id_error }
    }
}

impl From<EstimatorSpec> for EstimatorEntry {
    fn from(s: EstimatorSpec) -> Self {
        EstimatorEntry::Full {
            id: s.id.as_str().to_string(),
            label: (s.label != s.id.as_str()).then_some(s.label),
            self_normalize: s.self_normalize,
            reward_table: s.reward_table,
            use_schedule: s.use_schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvConfig,
    pub estimators: Vec<EstimatorSpec>,
    pub n_grid: Vec<usize>,
    pub horizons: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub metric: Metric,
    /// Project every estimate onto the feasible return range.
    #[serde(default)]
    pub clip: bool,
    /// Largest tolerated fraction of failed estimator runs.
    #[serde(default = "default_attrition")]
    pub attrition_threshold: f64,
}

impl ExperimentConfig {
    pub fn new(environment: EnvConfig, estimators: &[EstimatorId], n_grid: Vec<usize>, horizons: Vec<usize>) -> Self {
        Self {
            environment,
            estimators: estimators.iter().copied().map(EstimatorSpec::new).collect(),
            n_grid,
            horizons,
            replications: default_replications(),
            seed: 0,
            output: None,
            metric: Metric::default(),
            clip: false,
            attrition_threshold: default_attrition(),
        }
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| HarnessError::Json { path: origin.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if let Some(unknown) = self.estimators.iter().find_map(|e| e.id_error.as_ref()) {
            let valid: Vec<&str> = EstimatorId::ALL.iter().map(|i| i.as_str()).collect();
            return bad(format!("unknown estimator {unknown:?} (expected one of {})", valid.join(", ")));
        }
        if self.estimators.is_empty() {
            return bad("no estimators configured".into());
        }
        let mut labels: Vec<&str> = self.estimators.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return bad("estimator labels must be unique".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be a nonempty list of positive integers".into());
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons must be a nonempty list of positive integers".into());
        }
        if self.replications < 2 {
            return bad(format!("replications = {} but at least 2 are needed for intervals", self.replications));
        }
        if !(0.0..=1.0).contains(&self.attrition_threshold) {
            return bad("attrition_threshold must lie in [0, 1]".into());
        }
        Ok(())
    }
}
