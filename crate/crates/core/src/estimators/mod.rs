//! The estimator zoo.
//!
//! Most estimators are specializations of [`framework_eval`], which
//! evaluates
//!
//! ```text
//! v = 1/n sum_i g(s_1^i) + sum_i sum_t w_t^i / phi_t * (r_t^i + f_t(s_t^i, a_t^i, s_{t+1}^i))
//! ```
//!
//! with either cumulative action ratios or marginalized state weights in
//! the `w` slot. Steps are indexed from 0 in code; a step `t` here is step
//! `t + 1` of the usual 1-based notation and all numeric results are the
//! same under either convention.

mod framework;
mod importance;
mod marginalized;
mod model_based;
mod ssd;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use framework::{
    framework_eval, ControlVariate, FrameworkSpec, InitialTerm, Normalizer, QEstimate, QProvenance, RewardSource, WeightSource,
};
pub use importance::{dr, naive_is, wdr, wis};
pub use marginalized::{mdr, mdr_with, mis, MisOptions, QSource};
pub use model_based::{dm, fit_model, fit_q_model};
pub use ssd::{ssd_is, ssd_ratio, SsdRatio};

use crate::mdp::RewardBounds;

/// Per-step weight statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightDiagnostics {
    /// Largest effective weight `w / phi * n` seen at any step.
    pub max_weight: f64,
    /// Kish effective sample size `(sum w)^2 / sum w^2` per step.
    pub ess: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub estimate: f64,
    /// The estimate was moved by [`clip_estimate`].
    pub clipped: bool,
    /// Steps with a vanishing normalizer, contributing 0.
    pub degenerate_steps: Vec<usize>,
    pub weights: WeightDiagnostics,
}

impl EstimatorOutput {
    pub fn plain(estimate: f64) -> Self {
        Self { estimate, clipped: false, degenerate_steps: Vec::new(), weights: WeightDiagnostics::default() }
    }

    /// Project the estimate onto the feasible return range.
    pub fn clipped(mut self, bounds: RewardBounds, horizon: usize) -> Self {
        let v = clip_estimate(self.estimate, bounds, horizon);
        self.clipped = v != self.estimate;
        self.estimate = v;
        self
    }
}

/// Projection onto `[H r_min, H r_max]`, which is `[0, H R_max]` for
/// nonnegative rewards.
pub fn clip_estimate(v: f64, bounds: RewardBounds, horizon: usize) -> f64 {
    let (lo, hi) = bounds.return_range(horizon);
    v.max(lo).min(hi)
}

/// Stable estimator identifiers used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    Is,
    Wis,
    Dr,
    Wdr,
    Dm,
    Mis,
    Mdr,
    SsdIs,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 8] = [
        EstimatorId::Is,
        EstimatorId::Wis,
        EstimatorId::Dr,
        EstimatorId::Wdr,
        EstimatorId::Dm,
        EstimatorId::Mis,
        EstimatorId::Mdr,
        EstimatorId::SsdIs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::Is => "is",
            EstimatorId::Wis => "wis",
            EstimatorId::Dr => "dr",
            EstimatorId::Wdr => "wdr",
            EstimatorId::Dm => "dm",
            EstimatorId::Mis => "mis",
            EstimatorId::Mdr => "mdr",
            EstimatorId::SsdIs => "ssd-is",
        }
    }

    /// Whether the estimator fits a tabular model and so needs finite
    /// actions and a target policy table.
    pub fn needs_model(&self) -> bool {
        matches!(self, EstimatorId::Dr | EstimatorId::Wdr | EstimatorId::Dm | EstimatorId::Mdr)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EstimatorId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(alloc::format!("unknown estimator id {s:?}")))
    }
}

#[cfg(test)]
mod tests;
