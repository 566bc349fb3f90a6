//! Exact dynamic-programming oracle.
//!
//! Everything here needs the true model and is used for ground truth and
//! theoretical diagnostics, never by an estimator.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::mdp::{FinitePolicy, TabularMdp};
use crate::spectral;
use crate::{Error, Result};

/// Exact evaluation of a policy on a tabular model. Step-indexed vectors
/// are 0-based; `values` has an extra all-zero entry for step `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEvaluation {
    /// `d_t^pi`, one distribution per step.
    pub marginals: Vec<Vec<f64>>,
    /// `V_t^pi(s)` for `t = 0..=H`.
    pub values: Vec<Vec<f64>>,
    /// `Q_t^pi(s, a)` flattened `[s][a]`, one table per step.
    pub q_values: Vec<Vec<f64>>,
    /// `r_t^pi(s) = sum_a pi(a|s) r_t(s, a)`.
    pub expected_rewards: Vec<Vec<f64>>,
    /// `v^pi = <d_1, V_1>`.
    pub value: f64,
}

impl ExactEvaluation {
    pub fn q(&self, t: usize, s: usize, a: usize, num_actions: usize) -> f64 {
        self.q_values[t][s * num_actions + a]
    }

    /// `sum_t <d_t^pi, r_t^pi>`, the forward route to `v^pi`.
    pub fn forward_value(&self) -> f64 {
        self.marginals.iter().zip(&self.expected_rewards).map(|(d, r)| d.iter().zip(r).map(|(a, b)| a * b).sum::<f64>()).sum()
    }
}

/// `P_t^pi(s' | s) = sum_a T_t(s'|s,a) pi_t(a|s)`, stored `[s][s']`.
fn state_transition(mdp: &TabularMdp, policy: &FinitePolicy, t: usize) -> Vec<f64> {
    let n = mdp.num_states();
    let mut p = vec![0.0; n * n];
    for s in 0..n {
        for (a, &pa) in policy.row(t, s).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (sp, &tp) in mdp.transition(t, s, a).iter().enumerate() {
                p[s * n + sp] += pa * tp;
            }
        }
    }
    p
}

/// Exact state marginals `d_1 .. d_H` under `policy`.
pub fn exact_marginals(mdp: &TabularMdp, policy: &FinitePolicy) -> Result<Vec<Vec<f64>>> {
    policy.check_shape(mdp.num_states(), mdp.num_actions())?;
    let n = mdp.num_states();
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut d = mdp.initial().to_vec();
    for t in 0..mdp.horizon() {
        out.push(d.clone());
        if t + 1 == mdp.horizon() {
            break;
        }
        let p = state_transition(mdp, policy, t);
        let mut next = vec![0.0; n];
        for s in 0..n {
            if d[s] == 0.0 {
                continue;
            }
            for sp in 0..n {
                next[sp] += p[s * n + sp] * d[s];
            }
        }
        d = next;
    }
    Ok(out)
}

/// Backward Bellman recursion with `V_{H+1} = 0`.
pub fn exact_values(mdp: &TabularMdp, policy: &FinitePolicy) -> Result<ExactEvaluation> {
    let marginals = exact_marginals(mdp, policy)?;
    let (ns, na, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut values = vec![vec![0.0; ns]; h + 1];
    let mut q_values = vec![vec![0.0; ns * na]; h];
    let mut expected_rewards = vec![vec![0.0; ns]; h];
    for t in (0..h).rev() {
        for s in 0..ns {
            let mut v = 0.0;
            let mut rr = 0.0;
            for a in 0..na {
                let q: f64 =
                    mdp.transition(t, s, a).iter().zip(mdp.reward(t, s, a)).zip(&values[t + 1]).map(|((p, r), vn)| p * (r + vn)).sum();
                q_values[t][s * na + a] = q;
                let pa = policy.prob(t, s, a);
                v += pa * q;
                rr += pa * mdp.expected_reward(t, s, a);
            }
            values[t][s] = v;
            expected_rewards[t][s] = rr;
        }
    }
    let value = mdp.initial().iter().zip(&values[0]).map(|(d, v)| d * v).sum();
    Ok(ExactEvaluation { marginals, values, q_values, expected_rewards, value })
}

struct Coverage {
    target: ExactEvaluation,
    behavior_marginals: Vec<Vec<f64>>,
}

fn coverage(mdp: &TabularMdp, target: &FinitePolicy, behavior: &FinitePolicy) -> Result<Coverage> {
    FinitePolicy::max_ratio(target, behavior, mdp.horizon())?;
    let target_eval = exact_values(mdp, target)?;
    let behavior_marginals = exact_marginals(mdp, behavior)?;
    for (t, (dp, dm)) in target_eval.marginals.iter().zip(&behavior_marginals).enumerate() {
        for s in 0..mdp.num_states() {
            if dp[s] > 0.0 && dm[s] <= 0.0 {
                return Err(Error::Coverage { step: t, state: s });
            }
        }
    }
    Ok(Coverage { target: target_eval, behavior_marginals })
}

/// Per-step contributions `sum_s d_pi^2 / d_mu * term(t, s)` over states
/// visited by the target.
fn weighted_state_sum(cov: &Coverage, mut term: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut total = 0.0;
    for (t, (dp, dm)) in cov.target.marginals.iter().zip(&cov.behavior_marginals).enumerate() {
        for s in 0..dp.len() {
            if dp[s] > 0.0 {
                total += dp[s] * dp[s] / dm[s] * term(t, s);
            }
        }
    }
    total
}

/// Variance of `V_1(s_1)` under the initial distribution: the boundary
/// term at `h = 0`, where the ratios are identically 1 and there is no
/// reward.
fn initial_value_variance(mdp: &TabularMdp, eval: &ExactEvaluation) -> f64 {
    let d1 = mdp.initial();
    let m1: f64 = d1.iter().zip(&eval.values[0]).map(|(d, v)| d * v).sum();
    let m2: f64 = d1.iter().zip(&eval.values[0]).map(|(d, v)| d * v * v).sum();
    (m2 - m1 * m1).max(0.0)
}

/// Leading term of the clipped-MIS mean-squared error:
///
/// `(1/n) sum_h sum_s d_h^pi(s)^2 / d_h^mu(s) Var_mu[rho (V_{h+1}(s') + r_h) | s]`
///
/// plus the `h = 0` boundary term `Var_{d_1}[V_1]`. States the target never
/// reaches contribute nothing.
pub fn mis_mse_leading_term(mdp: &TabularMdp, target: &FinitePolicy, behavior: &FinitePolicy, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let cov = coverage(mdp, target, behavior)?;
    let sigma2 = mdp.noise().variance();
    let na = mdp.num_actions();
    let sum = weighted_state_sum(&cov, |t, s| {
        let mut m2 = 0.0;
        for a in 0..na {
            let p = target.prob(t, s, a);
            if p == 0.0 {
                continue;
            }
            let second: f64 = mdp
                .transition(t, s, a)
                .iter()
                .zip(mdp.reward(t, s, a))
                .zip(&cov.target.values[t + 1])
                .map(|((tp, r), vn)| tp * (r + vn) * (r + vn))
                .sum();
            m2 += p * p / behavior.prob(t, s, a) * (second + sigma2);
        }
        let m1 = cov.target.values[t][s];
        (m2 - m1 * m1).max(0.0)
    });
    Ok((sum + initial_value_variance(mdp, &cov.target)) / n as f64)
}

/// Cramer-Rao expression
/// `(1/n) sum_h sum_s d_h^pi^2 / d_h^mu sum_a pi^2/mu Var[V_{h+1}(s') + r_h | s, a]`.
pub fn cr_lower_bound(mdp: &TabularMdp, target: &FinitePolicy, behavior: &FinitePolicy, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let cov = coverage(mdp, target, behavior)?;
    let sigma2 = mdp.noise().variance();
    let na = mdp.num_actions();
    let sum = weighted_state_sum(&cov, |t, s| {
        let mut acc = 0.0;
        for a in 0..na {
            let p = target.prob(t, s, a);
            if p == 0.0 {
                continue;
            }
            let second: f64 = mdp
                .transition(t, s, a)
                .iter()
                .zip(mdp.reward(t, s, a))
                .zip(&cov.target.values[t + 1])
                .map(|((tp, r), vn)| tp * (r + vn) * (r + vn))
                .sum();
            let q = cov.target.q(t, s, a, na);
            acc += p * p / behavior.prob(t, s, a) * ((second - q * q).max(0.0) + sigma2);
        }
        acc
    });
    Ok(sum / n as f64)
}

/// The pieces of the finite-sample MSE bound for clipped MIS, kept
/// separate for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBound {
    pub leading: f64,
    /// `1 + sqrt(16 log n / (n min d_mu))`.
    pub multiplicative: f64,
    /// `19 tau_a^2 tau_s^2 S H^2 (sigma^2 + R_max^2 + V_max^2) / n^2`.
    pub additive: f64,
    pub tau_a: f64,
    pub tau_s: f64,
    /// Smallest positive `d_t^mu(s)`.
    pub min_behavior_marginal: f64,
    /// Whether `n` exceeds both sample-size thresholds for every step.
    pub threshold_met: bool,
}

impl MseBound {
    pub fn total(&self) -> f64 {
        self.leading * self.multiplicative + self.additive
    }
}

/// Full finite-sample bound. `R_max` is the largest reward magnitude and
/// `V_max = H R_max`; minima run over states reached by either policy.
pub fn mse_bound(mdp: &TabularMdp, target: &FinitePolicy, behavior: &FinitePolicy, n: usize) -> Result<MseBound> {
    let leading = mis_mse_leading_term(mdp, target, behavior, n)?;
    let cov = coverage(mdp, target, behavior)?;
    let tau_a = FinitePolicy::max_ratio(target, behavior, mdp.horizon())?;
    let mut tau_s = 0.0f64;
    let mut min_mu = f64::INFINITY;
    let mut min_max = f64::INFINITY;
    for (dp, dm) in cov.target.marginals.iter().zip(&cov.behavior_marginals) {
        for s in 0..dp.len() {
            if dm[s] > 0.0 {
                tau_s = tau_s.max(dp[s] / dm[s]);
                min_mu = min_mu.min(dm[s]);
                min_max = min_max.min(dp[s].max(dm[s]));
            }
        }
    }
    let nf = n as f64;
    let h = mdp.horizon() as f64;
    let r_max = mdp.bounds().magnitude();
    let v_max = h * r_max;
    let sigma2 = mdp.noise().variance();
    let multiplicative = 1.0 + Float::sqrt(16.0 * Float::ln(nf) / (nf * min_mu));
    let additive =
        19.0 * tau_a * tau_a * tau_s * tau_s * mdp.num_states() as f64 * h * h * (sigma2 + r_max * r_max + v_max * v_max) / (nf * nf);
    let threshold = (16.0 * Float::ln(nf) / min_mu).max(4.0 * h * tau_a * tau_s / min_max);
    Ok(MseBound { leading, multiplicative, additive, tau_a, tau_s, min_behavior_marginal: min_mu, threshold_met: nf > threshold })
}

/// Exact stationary quantities behind SSD-IS.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryRatio {
    /// `d_inf^pi`, leading eigenvector of `P^pi` on the simplex.
    pub target_stationary: Vec<f64>,
    /// Average of the exact behavior marginals over steps `1..H-1`.
    pub behavior_average: Vec<f64>,
    /// `d_inf^pi(s) / dbar^mu(s)`, zero where both vanish.
    pub ratio: Vec<f64>,
}

/// Exact stationary ratio for a time-invariant model.
pub fn stationary_ratio_oracle(
    mdp: &TabularMdp,
    target: &FinitePolicy,
    behavior: &FinitePolicy,
    horizon: usize,
) -> Result<StationaryRatio> {
    if !mdp.is_stationary() || !target.is_stationary() || !behavior.is_stationary() {
        return Err(Error::InvalidModel("stationary ratio needs time-invariant dynamics and policies".into()));
    }
    if horizon < 2 {
        return Err(Error::InvalidArgument("horizon must be at least 2".into()));
    }
    let n = mdp.num_states();
    let p = state_transition(mdp, target, 0);
    // column-stochastic form: col[s' * n + s] = P(s' | s)
    let mut col = vec![0.0; n * n];
    for s in 0..n {
        for sp in 0..n {
            col[sp * n + s] = p[s * n + sp];
        }
    }
    let target_stationary = spectral::stationary_distribution(&col, n)?;
    let long = mdp.with_horizon(horizon - 1)?;
    let mu_marginals = exact_marginals(&long, behavior)?;
    let mut behavior_average = vec![0.0; n];
    for d in &mu_marginals {
        for (acc, x) in behavior_average.iter_mut().zip(d) {
            *acc += x;
        }
    }
    let steps = mu_marginals.len() as f64;
    behavior_average.iter_mut().for_each(|x| *x /= steps);
    let mut ratio = vec![0.0; n];
    for s in 0..n {
        if behavior_average[s] > 0.0 {
            ratio[s] = target_stationary[s] / behavior_average[s];
        } else if target_stationary[s] > 0.0 {
            return Err(Error::Coverage { step: 0, state: s });
        }
    }
    Ok(StationaryRatio { target_stationary, behavior_average, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::RewardBounds;

    /// 0 -> 1 -> 2 deterministic chain, reward 1 on every move.
    fn chain() -> TabularMdp {
        let t = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let r = [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        TabularMdp::stationary(3, 1, 3, vec![1.0, 0.0, 0.0], &t, &r, RewardBounds::nonnegative(1.0).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_chain_marginals() {
        let p = FinitePolicy::uniform(3, 1).unwrap();
        let d = exact_marginals(&chain(), &p).unwrap();
        assert_eq!(d, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let ev = exact_values(&chain(), &p).unwrap();
        assert_eq!(ev.value, 2.0);
        assert_eq!(ev.forward_value(), 2.0);
        assert_eq!(ev.values[3], vec![0.0; 3]);
    }

    #[test]
    fn zero_rewards_give_zero_value() {
        let t = [0.5, 0.5, 0.5, 0.5, 0.1, 0.9, 0.3, 0.7];
        let mdp = TabularMdp::stationary(2, 2, 6, vec![0.4, 0.6], &t, &[0.0; 8], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        let ev = exact_values(&mdp, &FinitePolicy::uniform(2, 2).unwrap()).unwrap();
        assert_eq!(ev.value, 0.0);
        assert!(ev.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn on_policy_deterministic_mdp_has_zero_mse_terms() {
        let p = FinitePolicy::uniform(3, 1).unwrap();
        assert_eq!(mis_mse_leading_term(&chain(), &p, &p, 10).unwrap(), 0.0);
        assert_eq!(cr_lower_bound(&chain(), &p, &p, 10).unwrap(), 0.0);
    }

    #[test]
    fn one_step_bandit_reduces_to_weighted_reward_variance() {
        // two actions, terminal after one step, rewards 1 and 0
        let t = [1.0, 1.0];
        let mdp = TabularMdp::stationary(1, 2, 1, vec![1.0], &t, &[1.0, 0.0], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        let pi = FinitePolicy::constant(1, &[0.9, 0.1]).unwrap();
        let mu = FinitePolicy::uniform(1, 2).unwrap();
        // rho * r is 1.8 w.p. 1/2 and 0 otherwise
        let var = 0.5 * 1.8 * 1.8 - 0.9 * 0.9;
        let got = mis_mse_leading_term(&mdp, &pi, &mu, 4).unwrap();
        assert!((got - var / 4.0).abs() < 1e-15);
        // rewards are deterministic given the action
        assert_eq!(cr_lower_bound(&mdp, &pi, &mu, 4).unwrap(), 0.0);
    }

    #[test]
    fn coverage_violation() {
        // action 1 leads to state 1, which mu never reaches
        let t = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let mdp = TabularMdp::stationary(2, 2, 3, vec![1.0, 0.0], &t, &[0.0; 8], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        let pi = FinitePolicy::constant(2, &[0.0, 1.0]).unwrap();
        let mu = FinitePolicy::constant(2, &[1.0, 0.0]).unwrap();
        assert!(matches!(mis_mse_leading_term(&mdp, &pi, &mu, 5), Err(Error::Coverage { .. })));
    }

    #[test]
    fn stationary_oracle_on_absorbing_chain() {
        // state 0 absorbing; state 1 leaves w.p. 0.1 under action 0
        let t = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let mdp = TabularMdp::stationary(2, 2, 8, vec![0.0, 1.0], &t, &[0.0; 8], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        let pi = FinitePolicy::constant(2, &[0.1, 0.9]).unwrap();
        let mu = FinitePolicy::constant(2, &[0.05, 0.95]).unwrap();
        let o = stationary_ratio_oracle(&mdp, &pi, &mu, 64).unwrap();
        assert!((o.target_stationary[0] - 1.0).abs() < 1e-12);
        assert!(o.target_stationary[1].abs() < 1e-12);
        assert!(o.ratio[1] < 1e-10);
    }

    #[test]
    fn stationary_oracle_rejects_two_closed_classes() {
        let t = [1.0, 0.0, 0.0, 1.0];
        let mdp = TabularMdp::stationary(2, 1, 4, vec![0.5, 0.5], &t, &[0.0; 4], RewardBounds::nonnegative(1.0).unwrap()).unwrap();
        let p = FinitePolicy::uniform(2, 1).unwrap();
        assert!(matches!(stationary_ratio_oracle(&mdp, &p, &p, 10), Err(Error::AmbiguousEigenvector { .. })));
    }
}
