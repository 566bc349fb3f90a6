//! State-marginal estimation from logged episodes.
//!
//! Behavior marginals come from counting. Target marginals are built
//! forward in time by reweighting each observed transition with the current
//! marginal ratio estimate times the action ratio:
//!
//! ```text
//! d_pi[t+1](s) = 1/n sum_i d_pi[t](s_t^i) / d_mu[t](s_t^i) * rho_t^i * 1(s_{t+1}^i = s)
//! ```
//!
//! A ratio at a state with no visits at step `t` is taken to be 0. The
//! self-normalized variant divides each step by its total mass.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mdp::{EpisodeBatch, ObservationSchedule};
use crate::{Error, Result};

/// Visit counts `n_{s_t}` per step.
pub fn state_counts(batch: &EpisodeBatch) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0usize; batch.num_states()]; batch.horizon()];
    for ep in batch.episodes() {
        for (t, st) in ep.steps.iter().enumerate() {
            counts[t][st.state] += 1;
        }
    }
    counts
}

/// `d_mu[t](s) = n_{s_t} / n`.
pub fn behavior_marginals(batch: &EpisodeBatch) -> Vec<Vec<f64>> {
    let n = batch.len() as f64;
    state_counts(batch).into_iter().map(|row| row.into_iter().map(|c| c as f64 / n).collect()).collect()
}

/// Forward recursion over a list of checkpoint steps. Between checkpoints
/// the action ratios of the gap are multiplied together. Returns the
/// target marginals at each checkpoint and the positions (into
/// `checkpoints`) where the self-normalizer vanished.
fn recursion(batch: &EpisodeBatch, checkpoints: &[usize], normalize: bool) -> (Vec<Vec<f64>>, Vec<usize>) {
    let ns = batch.num_states();
    let n = batch.len() as f64;
    let counts = state_counts(batch);
    let eps = batch.episodes();

    let mut out = Vec::with_capacity(checkpoints.len());
    let mut degenerate = Vec::new();
    let mut current = vec![0.0; ns];
    for ep in eps {
        current[ep.steps[checkpoints[0]].state] += 1.0;
    }
    current.iter_mut().for_each(|x| *x /= n);
    out.push(current.clone());

    for k in 0..checkpoints.len() - 1 {
        let (from, to) = (checkpoints[k], checkpoints[k + 1]);
        let mut next = vec![0.0; ns];
        let mut total = 0.0;
        for ep in eps {
            let s = ep.steps[from].state;
            let c = counts[from][s];
            if c == 0 {
                continue;
            }
            // d_pi / d_mu with d_mu = c / n
            let w = current[s] * n / c as f64;
            if w == 0.0 {
                continue;
            }
            let rho: f64 = ep.steps[from..to].iter().map(|st| st.ratio()).product();
            let contrib = w * rho;
            next[ep.steps[to - 1].next_state] += contrib;
            total += contrib;
        }
        if normalize {
            if total > 0.0 {
                next.iter_mut().for_each(|x| *x /= total);
            } else {
                degenerate.push(k + 1);
            }
        } else {
            next.iter_mut().for_each(|x| *x /= n);
        }
        out.push(next.clone());
        current = next;
    }
    (out, degenerate)
}

fn all_steps(batch: &EpisodeBatch) -> Vec<usize> {
    (0..batch.horizon()).collect()
}

/// Unnormalized recursive estimate of `d_t^pi`. The per-step totals need
/// not equal 1.
pub fn target_marginals_raw(batch: &EpisodeBatch) -> Vec<Vec<f64>> {
    recursion(batch, &all_steps(batch), false).0
}

/// Self-normalized recursive estimate of `d_t^pi`; every step sums to 1.
/// Fails if all weight vanishes at some step.
pub fn target_marginals_selfnorm(batch: &EpisodeBatch) -> Result<Vec<Vec<f64>>> {
    let (out, degenerate) = recursion(batch, &all_steps(batch), true);
    match degenerate.first() {
        Some(&t) => Err(Error::DegenerateNormalizer { step: t }),
        None => Ok(out),
    }
}

/// Importance-weighted one-step transition estimate at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    num_states: usize,
    /// `[s][s']`: `P(s' | s) = 1/n_s sum_i rho_t^i 1(s_t^i = s, s_{t+1}^i = s')`.
    pub matrix: Vec<f64>,
    /// States with `n_s > 0`; other rows are all zero.
    pub visited: Vec<bool>,
}

impl TransitionEstimate {
    pub fn prob(&self, s: usize, next: usize) -> f64 {
        self.matrix[s * self.num_states + next]
    }

    /// `d' = P d`.
    pub fn propagate(&self, d: &[f64]) -> Vec<f64> {
        let ns = self.num_states;
        let mut out = vec![0.0; ns];
        for s in 0..ns {
            if d[s] == 0.0 {
                continue;
            }
            for sp in 0..ns {
                out[sp] += self.matrix[s * ns + sp] * d[s];
            }
        }
        out
    }
}

/// Rows need not be stochastic: they are importance-weighted frequencies.
pub fn transition_is(batch: &EpisodeBatch, t: usize) -> Result<TransitionEstimate> {
    check_step(batch, t)?;
    let ns = batch.num_states();
    let mut matrix = vec![0.0; ns * ns];
    let mut counts = vec![0usize; ns];
    for ep in batch.episodes() {
        let st = &ep.steps[t];
        counts[st.state] += 1;
        matrix[st.state * ns + st.next_state] += st.ratio();
    }
    for s in 0..ns {
        if counts[s] > 0 {
            let c = counts[s] as f64;
            matrix[s * ns..(s + 1) * ns].iter_mut().for_each(|x| *x /= c);
        }
    }
    Ok(TransitionEstimate { num_states: ns, matrix, visited: counts.iter().map(|&c| c > 0).collect() })
}

/// `r_pi[t](s) = 1/n_s sum_i rho_t^i r_t^i 1(s_t^i = s)`; `None` where
/// `n_s = 0`.
pub fn reward_is(batch: &EpisodeBatch, t: usize) -> Result<Vec<Option<f64>>> {
    check_step(batch, t)?;
    let ns = batch.num_states();
    let mut sums = vec![0.0; ns];
    let mut counts = vec![0usize; ns];
    for ep in batch.episodes() {
        let st = &ep.steps[t];
        counts[st.state] += 1;
        sums[st.state] += st.ratio() * st.reward;
    }
    Ok(sums.into_iter().zip(counts).map(|(s, c)| (c > 0).then(|| s / c as f64)).collect())
}

fn check_step(batch: &EpisodeBatch, t: usize) -> Result<()> {
    if t >= batch.horizon() {
        return Err(Error::InvalidArgument(format!("step {t} outside horizon {}", batch.horizon())));
    }
    Ok(())
}

/// Cellwise sample mean of rewards over `(t, s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    num_states: usize,
    num_actions: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl RewardTable {
    #[inline]
    fn idx(&self, t: usize, s: usize, a: usize) -> usize {
        (t * self.num_states + s) * self.num_actions + a
    }

    /// Mean reward of the cell, or `None` if it was never visited.
    #[inline]
    pub fn get(&self, t: usize, s: usize, a: usize) -> Option<f64> {
        let i = self.idx(t, s, a);
        (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64)
    }

    pub fn count(&self, t: usize, s: usize, a: usize) -> usize {
        self.counts[self.idx(t, s, a)]
    }
}

/// Needs finite actions.
pub fn reward_table(batch: &EpisodeBatch) -> Result<RewardTable> {
    let na = batch.num_actions().ok_or(Error::ContinuousActions)?;
    let ns = batch.num_states();
    let len = batch.horizon() * ns * na;
    let mut table = RewardTable { num_states: ns, num_actions: na, sums: vec![0.0; len], counts: vec![0; len] };
    for ep in batch.episodes() {
        for (t, st) in ep.steps.iter().enumerate() {
            let a = st.action.discrete().ok_or(Error::ContinuousActions)?;
            let i = table.idx(t, st.state, a);
            table.sums[i] += st.reward;
            table.counts[i] += 1;
        }
    }
    Ok(table)
}

/// Rescale a nonnegative vector to sum to 1.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::DegenerateSimplex);
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

/// `sum_s |d_hat[t](s) - d[t](s)|` for every step.
pub fn marginal_l1_diagnostic(estimate: &[Vec<f64>], oracle: &[Vec<f64>]) -> Result<Vec<f64>> {
    if estimate.len() != oracle.len() {
        return Err(Error::ShapeMismatch(format!("{} steps vs {} steps", estimate.len(), oracle.len())));
    }
    estimate
        .iter()
        .zip(oracle)
        .enumerate()
        .map(|(t, (e, o))| {
            if e.len() != o.len() {
                return Err(Error::ShapeMismatch(format!("step {t}: {} states vs {}", e.len(), o.len())));
            }
            Ok(e.iter().zip(o).map(|(a, b)| (a - b).abs()).sum())
        })
        .collect()
}

/// Marginal estimates and ratio weights at a set of observed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimate {
    /// Steps the estimates refer to (all steps unless a schedule hides some).
    pub steps: Vec<usize>,
    pub behavior: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    /// `w(s) = d_pi(s) / d_mu(s)`, 0 where the state was not visited.
    pub weights: Vec<Vec<f64>>,
    pub counts: Vec<Vec<usize>>,
    /// Steps (not positions) whose self-normalizer vanished; their target
    /// marginals are all zero.
    pub degenerate_steps: Vec<usize>,
}

impl MarginalEstimate {
    /// `w` at position `k` of `steps`.
    #[inline]
    pub fn weight_at(&self, k: usize, s: usize) -> f64 {
        self.weights[k][s]
    }
}

impl MarginalEstimate {
    /// Weights from known marginals at every step, e.g. exact DP output.
    /// `counts` is left empty.
    pub fn from_known(target: Vec<Vec<f64>>, behavior: Vec<Vec<f64>>) -> Result<Self> {
        if target.len() != behavior.len() || target.iter().zip(&behavior).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::ShapeMismatch("target and behavior marginals differ in shape".into()));
        }
        let weights = target
            .iter()
            .zip(&behavior)
            .map(|(dp, dm)| dp.iter().zip(dm).map(|(&p, &m)| if m > 0.0 { p / m } else { 0.0 }).collect())
            .collect();
        Ok(Self { steps: (0..target.len()).collect(), behavior, target, weights, counts: Vec::new(), degenerate_steps: Vec::new() })
    }
}

#[derive(Debug, Clone, Default)]
pub struct MarginalOptions<'a> {
    pub self_normalize: bool,
    pub schedule: Option<&'a ObservationSchedule>,
}

/// Behavior and target marginals plus ratio weights, optionally only at
/// the observable steps of a schedule.
pub fn estimate_marginals(batch: &EpisodeBatch, opts: &MarginalOptions<'_>) -> Result<MarginalEstimate> {
    let steps = match opts.schedule {
        Some(sch) => {
            if sch.horizon() != batch.horizon() {
                return Err(Error::ShapeMismatch(format!("schedule covers {} steps, batch has {}", sch.horizon(), batch.horizon())));
            }
            sch.checkpoints()
        }
        None => all_steps(batch),
    };
    let all_counts = state_counts(batch);
    let n = batch.len() as f64;
    let (target, degenerate) = recursion(batch, &steps, opts.self_normalize);
    let counts: Vec<Vec<usize>> = steps.iter().map(|&t| all_counts[t].clone()).collect();
    let behavior: Vec<Vec<f64>> = counts.iter().map(|row| row.iter().map(|&c| c as f64 / n).collect()).collect();
    let weights = target
        .iter()
        .zip(&counts)
        .map(|(d, c)| d.iter().zip(c).map(|(&dp, &cnt)| if cnt > 0 { dp * n / cnt as f64 } else { 0.0 }).collect())
        .collect();
    let degenerate_steps = degenerate.into_iter().map(|k| steps[k]).collect();
    Ok(MarginalEstimate { steps, behavior, target, weights, counts, degenerate_steps })
}
