use alloc::vec;
use alloc::vec::Vec;

use super::{EstimatorOutput, WeightDiagnostics};
use crate::exact::ExactEvaluation;
use crate::marginal::{reward_table, MarginalEstimate};
use crate::mdp::{EpisodeBatch, Step};
use crate::{Error, Result};

/// Normalizer `phi_t` of the cumulative-weight framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    /// `phi_t = n`.
    Constant,
    /// `phi_t = sum_j rho_{0:t}^j`.
    SelfNormalized,
}

/// `g(s_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialTerm {
    Zero,
    /// `V_hat_1(s_1)`.
    Value,
}

/// `f_t(s, a, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlVariate {
    Zero,
    /// `-Q_hat_t(s, a) + V_hat_{t+1}(s')`.
    QResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardSource {
    /// Logged `r_t`.
    Raw,
    /// Cellwise mean `r_hat(t, s, a)` fitted on the same batch.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    /// `rho_{0:t}`.
    Cumulative,
    /// `w_hat_t(s_t) * rho_t`.
    Marginalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameworkSpec {
    pub g: InitialTerm,
    pub phi: Normalizer,
    pub f: ControlVariate,
    pub reward: RewardSource,
    pub weights: WeightSource,
}

impl FrameworkSpec {
    pub const IS: Self = Self {
        g: InitialTerm::Zero,
        phi: Normalizer::Constant,
        f: ControlVariate::Zero,
        reward: RewardSource::Raw,
        weights: WeightSource::Cumulative,
    };
    pub const WIS: Self = Self { phi: Normalizer::SelfNormalized, ..Self::IS };
    pub const DR: Self = Self { g: InitialTerm::Value, f: ControlVariate::QResidual, ..Self::IS };
    pub const WDR: Self = Self { phi: Normalizer::SelfNormalized, ..Self::DR };
    /// Marginalized framework with logged rewards.
    pub const MARGINALIZED: Self = Self { weights: WeightSource::Marginalized, ..Self::IS };
    /// Marginalized framework with the fitted reward table.
    pub const MARGINALIZED_TABLE: Self = Self { reward: RewardSource::Table, ..Self::MARGINALIZED };

    fn needs_q(&self) -> bool {
        self.g == InitialTerm::Value || self.f == ControlVariate::QResidual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QProvenance {
    ModelBased,
    Oracle,
    Zero,
}

/// Value estimates `Q_hat_t(s, a)` and `V_hat_t(s)` with `V_hat_H = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QEstimate {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    q: Vec<f64>,
    v: Vec<f64>,
    pub provenance: QProvenance,
}

impl QEstimate {
    pub fn zero(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Self {
            num_states,
            num_actions,
            horizon,
            q: vec![0.0; horizon * num_states * num_actions],
            v: vec![0.0; (horizon + 1) * num_states],
            provenance: QProvenance::Zero,
        }
    }

    pub fn from_exact(eval: &ExactEvaluation, num_actions: usize, provenance: QProvenance) -> Self {
        let horizon = eval.q_values.len();
        let num_states = eval.values[0].len();
        Self { num_states, num_actions, horizon, q: eval.q_values.concat(), v: eval.values.concat(), provenance }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn q(&self, t: usize, s: usize, a: usize) -> f64 {
        self.q[(t * self.num_states + s) * self.num_actions + a]
    }

    /// `V_hat_t(s)`, zero at `t = H`.
    #[inline]
    pub fn v(&self, t: usize, s: usize) -> f64 {
        self.v[t * self.num_states + s]
    }

    pub(crate) fn set(&mut self, t: usize, s: usize, a: usize, value: f64) {
        self.q[(t * self.num_states + s) * self.num_actions + a] = value;
    }

    pub(crate) fn set_v(&mut self, t: usize, s: usize, value: f64) {
        self.v[t * self.num_states + s] = value;
    }

    fn check(&self, batch: &EpisodeBatch) -> Result<()> {
        if batch.num_actions() != Some(self.num_actions) || batch.num_states() != self.num_states || batch.horizon() != self.horizon {
            return Err(Error::ShapeMismatch("Q estimate does not match the batch".into()));
        }
        Ok(())
    }
}

fn action_of(step: &Step) -> Result<usize> {
    step.action.discrete().ok_or(Error::ContinuousActions)
}

/// Evaluate the generic estimator described by `spec`.
///
/// `marginals` is required for marginalized weights (estimated at every
/// step) and `q` whenever `g` or `f` use value estimates. A normalizer that
/// vanishes at a step makes that step contribute 0 and is reported in
/// `degenerate_steps`.
pub fn framework_eval(
    batch: &EpisodeBatch,
    spec: &FrameworkSpec,
    marginals: Option<&MarginalEstimate>,
    q: Option<&QEstimate>,
) -> Result<EstimatorOutput> {
    let n = batch.len();
    let nf = n as f64;
    let h = batch.horizon();
    let q = match (spec.needs_q(), q) {
        (true, None) => return Err(Error::InvalidSpec("value terms need a Q estimate".into())),
        (true, Some(q)) => {
            q.check(batch)?;
            Some(q)
        }
        (false, _) => None,
    };
    let marginals = match (spec.weights, marginals) {
        (WeightSource::Marginalized, None) => return Err(Error::InvalidSpec("marginalized weights need marginal estimates".into())),
        (WeightSource::Marginalized, Some(m)) => {
            if m.steps.len() != h || m.weights.iter().any(|w| w.len() != batch.num_states()) {
                return Err(Error::InvalidSpec("marginal estimates must cover every step".into()));
            }
            if spec.phi != Normalizer::Constant {
                return Err(Error::InvalidSpec("marginalized weights carry their own normalization".into()));
            }
            Some(m)
        }
        (WeightSource::Cumulative, _) => None,
    };
    let table = match spec.reward {
        RewardSource::Table => Some(reward_table(batch)?),
        RewardSource::Raw => None,
    };

    let eps = batch.episodes();
    let mut estimate = 0.0;
    if let Some(q) = q.filter(|_| spec.g == InitialTerm::Value) {
        let g: f64 = eps.iter().map(|ep| q.v(0, ep.initial_state())).sum();
        estimate += g / nf;
    }

    let mut weights = vec![1.0; n];
    let mut degenerate_steps = Vec::new();
    let mut diag = WeightDiagnostics { max_weight: 0.0, ess: Vec::with_capacity(h) };
    for t in 0..h {
        for (w, ep) in weights.iter_mut().zip(eps) {
            let st = &ep.steps[t];
            *w = match marginals {
                Some(m) => m.weight_at(t, st.state) * st.ratio(),
                None => *w * st.ratio(),
            };
        }
        let phi = match spec.phi {
            Normalizer::Constant => nf,
            Normalizer::SelfNormalized => weights.iter().sum(),
        };
        let (sum_w, sum_w2) = weights.iter().fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
        diag.ess.push(if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 });
        if !(phi > 0.0) {
            degenerate_steps.push(t);
            continue;
        }
        let mut step_sum = 0.0;
        for (w, ep) in weights.iter().zip(eps) {
            if *w == 0.0 {
                continue;
            }
            let st = &ep.steps[t];
            let reward = match &table {
                Some(tab) => tab.get(t, st.state, action_of(st)?).unwrap_or(0.0),
                None => st.reward,
            };
            let cv = match (spec.f, q) {
                (ControlVariate::QResidual, Some(q)) => -q.q(t, st.state, action_of(st)?) + q.v(t + 1, st.next_state),
                _ => 0.0,
            };
            let scaled = w / phi;
            diag.max_weight = diag.max_weight.max(scaled * nf);
            step_sum += scaled * (reward + cv);
        }
        estimate += step_sum;
    }
    Ok(EstimatorOutput { estimate, clipped: false, degenerate_steps, weights: diag })
}
