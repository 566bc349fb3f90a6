use alloc::vec;

use super::framework::{QEstimate, QProvenance};
use super::EstimatorOutput;
use crate::mdp::{EpisodeBatch, FinitePolicy, RewardBounds, TabularMdp};
use crate::{Error, Result};

/// Count-based maximum-likelihood model of the logged data.
///
/// Cells `(t, s, a)` that never occur become a zero-reward self-loop so the
/// fitted model is a proper MDP.
pub fn fit_model(batch: &EpisodeBatch) -> Result<TabularMdp> {
    let na = batch.num_actions().ok_or(Error::ContinuousActions)?;
    let (ns, h) = (batch.num_states(), batch.horizon());
    let block = ns * na;
    let mut counts = vec![0usize; h * block * ns];
    let mut reward_sum = vec![0.0; h * block];
    let mut initial = vec![0.0; ns];
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for ep in batch.episodes() {
        initial[ep.initial_state()] += 1.0;
        for (t, st) in ep.steps.iter().enumerate() {
            let a = st.action.discrete().ok_or(Error::ContinuousActions)?;
            let cell = t * block + st.state * na + a;
            counts[cell * ns + st.next_state] += 1;
            reward_sum[cell] += st.reward;
            lo = lo.min(st.reward);
            hi = hi.max(st.reward);
        }
    }
    let n = batch.len() as f64;
    initial.iter_mut().for_each(|d| *d /= n);

    let mut transitions = vec![0.0; h * block * ns];
    let mut rewards = vec![0.0; h * block * ns];
    for cell in 0..h * block {
        let row = &counts[cell * ns..(cell + 1) * ns];
        let total: usize = row.iter().sum();
        let out = &mut transitions[cell * ns..(cell + 1) * ns];
        if total == 0 {
            let s = (cell / na) % ns;
            out[s] = 1.0;
            continue;
        }
        for (p, &c) in out.iter_mut().zip(row) {
            *p = c as f64 / total as f64;
        }
        let r = reward_sum[cell] / total as f64;
        rewards[cell * ns..(cell + 1) * ns].iter_mut().for_each(|x| *x = r);
    }
    TabularMdp::new(ns, na, h, initial, transitions, rewards, RewardBounds::new(lo, hi)?)
}

/// `Q_hat` and `V_hat` of `target` in the fitted model.
///
/// Runs the backward recursion directly on the samples: the fitted
/// `Q_hat_t(s, a)` is the cell mean of `r + V_hat_{t+1}(s')`, so the dense
/// model never has to be materialized. Unvisited cells follow the
/// zero-reward self-loop convention of [`fit_model`].
pub fn fit_q_model(batch: &EpisodeBatch, target: &FinitePolicy) -> Result<QEstimate> {
    let na = batch.num_actions().ok_or(Error::ContinuousActions)?;
    let (ns, h) = (batch.num_states(), batch.horizon());
    target.check_shape(ns, na)?;
    let mut q = QEstimate::zero(ns, na, h);
    q.provenance = QProvenance::ModelBased;
    let mut sums = vec![0.0; ns * na];
    let mut counts = vec![0usize; ns * na];
    for t in (0..h).rev() {
        sums.iter_mut().for_each(|x| *x = 0.0);
        counts.iter_mut().for_each(|x| *x = 0);
        for ep in batch.episodes() {
            let st = &ep.steps[t];
            let a = st.action.discrete().ok_or(Error::ContinuousActions)?;
            sums[st.state * na + a] += st.reward + q.v(t + 1, st.next_state);
            counts[st.state * na + a] += 1;
        }
        for s in 0..ns {
            let mut v = 0.0;
            for a in 0..na {
                let c = counts[s * na + a];
                let qa = if c > 0 { sums[s * na + a] / c as f64 } else { q.v(t + 1, s) };
                q.set(t, s, a, qa);
                v += target.prob(t, s, a) * qa;
            }
            q.set_v(t, s, v);
        }
    }
    Ok(q)
}

/// Direct method: the value of `target` in the fitted model.
pub fn dm(batch: &EpisodeBatch, target: &FinitePolicy) -> Result<EstimatorOutput> {
    let q = fit_q_model(batch, target)?;
    let v: f64 = batch.episodes().iter().map(|ep| q.v(0, ep.initial_state())).sum();
    Ok(EstimatorOutput::plain(v / batch.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::model_win;
    use crate::exact::exact_values;

    #[test]
    fn sparse_recursion_matches_dense_model() {
        let bundle = model_win(6, 0.4).unwrap();
        let target = bundle.estimation_target.clone().unwrap();
        for seed in 0..5 {
            let batch = bundle.sample(40, seed).unwrap();
            let dense = exact_values(&fit_model(&batch).unwrap(), &target).unwrap();
            let sparse = fit_q_model(&batch, &target).unwrap();
            for t in 0..6 {
                for s in 0..3 {
                    assert!((dense.values[t][s] - sparse.v(t, s)).abs() < 1e-12);
                    for a in 0..2 {
                        assert!((dense.q(t, s, a, 2) - sparse.q(t, s, a)).abs() < 1e-12);
                    }
                }
            }
            assert!((dm(&batch, &target).unwrap().estimate - dense.value).abs() < 1e-12);
        }
    }

    #[test]
    fn unvisited_cells_self_loop() {
        let bundle = model_win(4, 0.4).unwrap();
        let batch = bundle.sample(1, 3).unwrap();
        let model = fit_model(&batch).unwrap();
        // state 1 is never visited at step 0
        assert_eq!(model.transition(0, 1, 0), &[0.0, 1.0, 0.0]);
        assert_eq!(model.expected_reward(0, 1, 0), 0.0);
    }
}
