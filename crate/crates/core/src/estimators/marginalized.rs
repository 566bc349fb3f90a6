use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::framework::{framework_eval, ControlVariate, FrameworkSpec, InitialTerm, QEstimate, RewardSource};
use super::model_based::fit_q_model;
use super::{EstimatorOutput, WeightDiagnostics};
use crate::marginal::{estimate_marginals, reward_table, MarginalEstimate, MarginalOptions};
use crate::mdp::{EpisodeBatch, FinitePolicy, ObservationSchedule};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MisOptions {
    /// Project each step's target marginal back onto the simplex.
    pub self_normalize: bool,
    /// Use the fitted reward table instead of logged rewards. With a
    /// schedule this applies to observable steps only, since hidden steps
    /// carry no usable state label.
    pub reward_table: bool,
    pub schedule: Option<ObservationSchedule>,
}

impl Default for MisOptions {
    fn default() -> Self {
        Self { self_normalize: true, reward_table: true, schedule: None }
    }
}

impl MisOptions {
    /// Raw recursion with logged rewards.
    pub fn raw() -> Self {
        Self { self_normalize: false, reward_table: false, schedule: None }
    }

    fn marginal_options(&self) -> MarginalOptions<'_> {
        MarginalOptions { self_normalize: self.self_normalize, schedule: self.schedule.as_ref() }
    }

    fn spec(&self) -> FrameworkSpec {
        if self.reward_table {
            FrameworkSpec::MARGINALIZED_TABLE
        } else {
            FrameworkSpec::MARGINALIZED
        }
    }
}

/// Marginalized importance sampling.
pub fn mis(batch: &EpisodeBatch, opts: &MisOptions) -> Result<EstimatorOutput> {
    let marginals = estimate_marginals(batch, &opts.marginal_options())?;
    let mut out = match &opts.schedule {
        Some(_) => segment_eval(batch, &marginals, opts.reward_table)?,
        None => framework_eval(batch, &opts.spec(), Some(&marginals), None)?,
    };
    out.degenerate_steps = merge_steps(out.degenerate_steps, &marginals.degenerate_steps);
    Ok(out)
}

fn merge_steps(mut a: Vec<usize>, b: &[usize]) -> Vec<usize> {
    a.extend_from_slice(b);
    a.sort_unstable();
    a.dedup();
    a
}

/// Marginal weight at each checkpoint times within-segment importance
/// sampling of the rewards that follow it.
fn segment_eval(batch: &EpisodeBatch, marginals: &MarginalEstimate, use_table: bool) -> Result<EstimatorOutput> {
    let table = if use_table { Some(reward_table(batch)?) } else { None };
    let eps = batch.episodes();
    let n = eps.len() as f64;
    let mut estimate = 0.0;
    let mut diag = WeightDiagnostics { max_weight: 0.0, ess: Vec::with_capacity(marginals.steps.len()) };
    let mut bounds: Vec<usize> = marginals.steps.clone();
    bounds.push(batch.horizon());
    for (k, win) in bounds.windows(2).enumerate() {
        let (start, end) = (win[0], win[1]);
        let (mut sum_w, mut sum_w2, mut seg_total) = (0.0, 0.0, 0.0);
        for ep in eps {
            let w0 = marginals.weight_at(k, ep.steps[start].state);
            sum_w += w0;
            sum_w2 += w0 * w0;
            if w0 == 0.0 {
                continue;
            }
            let mut prod = 1.0;
            let mut seg = 0.0;
            for t in start..end {
                let st = &ep.steps[t];
                prod *= st.ratio();
                let r = match (&table, t == start) {
                    (Some(tab), true) => tab.get(t, st.state, st.action.discrete().ok_or(Error::ContinuousActions)?).unwrap_or(0.0),
                    _ => st.reward,
                };
                seg += prod * r;
                diag.max_weight = diag.max_weight.max(w0 * prod);
            }
            seg_total += w0 * seg;
        }
        diag.ess.push(if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 });
        estimate += seg_total / n;
    }
    Ok(EstimatorOutput { estimate, clipped: false, degenerate_steps: Vec::new(), weights: diag })
}

/// Where MDR gets its value estimates.
#[derive(Debug, Clone, Copy)]
pub enum QSource<'a> {
    /// Fit a tabular model of this target policy on the held-out half.
    Fit(&'a FinitePolicy),
    /// Use the given estimate as is.
    Fixed(&'a QEstimate),
}

/// Marginalized doubly robust estimator with default options and a
/// model-based `Q_hat`.
pub fn mdr(batch: &EpisodeBatch, target: &FinitePolicy, split_seed: u64) -> Result<EstimatorOutput> {
    mdr_with(batch, split_seed, &MisOptions::default(), QSource::Fit(target))
}

/// The batch is shuffled with `split_seed` and split in two. The first half
/// (the larger one for odd sizes) estimates the marginals and carries the
/// weighted sum; the second fits `Q_hat`. The baseline term averages
/// `V_hat_1` over the whole batch.
pub fn mdr_with(batch: &EpisodeBatch, split_seed: u64, opts: &MisOptions, q: QSource<'_>) -> Result<EstimatorOutput> {
    if opts.schedule.is_some() {
        return Err(Error::InvalidSpec("MDR needs every step observed".into()));
    }
    let n = batch.len();
    if n < 2 {
        return Err(Error::InvalidArgument("MDR needs at least two episodes to split".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(split_seed));
    let (a, b) = idx.split_at(n.div_ceil(2));
    let half_a = batch.select(a)?;
    let fitted;
    let q = match q {
        QSource::Fixed(q) => q,
        QSource::Fit(target) => {
            fitted = fit_q_model(&batch.select(b)?, target)?;
            &fitted
        }
    };
    let marginals = estimate_marginals(&half_a, &opts.marginal_options())?;
    let spec = FrameworkSpec {
        g: InitialTerm::Zero,
        f: ControlVariate::QResidual,
        reward: if opts.reward_table { RewardSource::Table } else { RewardSource::Raw },
        ..FrameworkSpec::MARGINALIZED
    };
    let mut out = framework_eval(&half_a, &spec, Some(&marginals), Some(q))?;
    let baseline: f64 = batch.episodes().iter().map(|ep| q.v(0, ep.initial_state())).sum::<f64>() / n as f64;
    out.estimate += baseline;
    out.degenerate_steps = merge_steps(out.degenerate_steps, &marginals.degenerate_steps);
    Ok(out)
}
