use alloc::format;
use alloc::vec::Vec;

use super::check_simplex;
use crate::{Error, Result};

/// Tabular policy `pi(a | s)`, optionally different at every step.
///
/// A stationary policy stores a single `[s][a]` table that is broadcast over
/// all steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePolicy {
    num_states: usize,
    num_actions: usize,
    steps: usize,
    table: Vec<f64>,
}

impl FinitePolicy {
    /// Stationary policy from one pmf per state.
    pub fn stationary(rows: &[Vec<f64>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidPolicy("policy table is empty".into()));
        }
        let mut table = Vec::with_capacity(num_states * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::InvalidPolicy(format!("state {s} has {} actions, expected {num_actions}", row.len())));
            }
            check_simplex(row, || format!("policy row s={s}")).map_err(to_policy_err)?;
            table.extend_from_slice(row);
        }
        Ok(Self { num_states, num_actions, steps: 1, table })
    }

    /// Nonstationary policy: `tables[t][s]` is a pmf over actions.
    pub fn nonstationary(tables: &[Vec<Vec<f64>>]) -> Result<Self> {
        let first = tables.first().ok_or_else(|| Error::InvalidPolicy("no steps".into()))?;
        let mut policy = Self::stationary(first)?;
        for (t, rows) in tables.iter().enumerate().skip(1) {
            let p = Self::stationary(rows)?;
            if p.num_states != policy.num_states || p.num_actions != policy.num_actions {
                return Err(Error::InvalidPolicy(format!("step {t} has a different shape")));
            }
            policy.table.extend_from_slice(&p.table);
        }
        policy.steps = tables.len();
        Ok(policy)
    }

    /// The same pmf in every state.
    pub fn constant(num_states: usize, pmf: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..num_states).map(|_| pmf.to_vec()).collect();
        Self::stationary(&rows)
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Result<Self> {
        let p = 1.0 / num_actions as f64;
        Self::constant(num_states, &alloc::vec![p; num_actions])
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn is_stationary(&self) -> bool {
        self.steps == 1
    }

    /// Number of distinct step tables (1 for stationary policies).
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `pi_t(. | s)`. Steps beyond the stored tables reuse the last one.
    #[inline]
    pub fn row(&self, t: usize, s: usize) -> &[f64] {
        let t = t.min(self.steps - 1);
        let o = (t * self.num_states + s) * self.num_actions;
        &self.table[o..o + self.num_actions]
    }

    #[inline]
    pub fn prob(&self, t: usize, s: usize, a: usize) -> f64 {
        self.row(t, s)[a]
    }

    /// Check shape compatibility with a model of `num_states` x `num_actions`.
    pub fn check_shape(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if self.num_states != num_states || self.num_actions != num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}, model is {num_states}x{num_actions}",
                self.num_states, self.num_actions
            )));
        }
        Ok(())
    }

    /// `max pi/mu` over all steps, states and actions with `pi > 0`, or a
    /// coverage error if `mu = 0` somewhere `pi > 0`.
    pub fn max_ratio(target: &Self, behavior: &Self, horizon: usize) -> Result<f64> {
        target.check_shape(behavior.num_states, behavior.num_actions)?;
        let steps = horizon.min(target.steps.max(behavior.steps));
        let mut bound = 0.0f64;
        for t in 0..steps.max(1) {
            for s in 0..target.num_states {
                for a in 0..target.num_actions {
                    let p = target.prob(t, s, a);
                    if p > 0.0 {
                        let m = behavior.prob(t, s, a);
                        if m <= 0.0 {
                            return Err(Error::Coverage { step: t, state: s });
                        }
                        bound = bound.max(p / m);
                    }
                }
            }
        }
        Ok(bound)
    }
}

fn to_policy_err(e: Error) -> Error {
    match e {
        Error::InvalidModel(m) => Error::InvalidPolicy(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rows_must_be_pmfs() {
        assert!(FinitePolicy::stationary(&[vec![0.5, 0.6]]).is_err());
        assert!(FinitePolicy::stationary(&[vec![-0.5, 1.5]]).is_err());
        assert!(FinitePolicy::stationary(&[vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn nonstationary_rows_are_indexed_by_step() {
        let p = FinitePolicy::nonstationary(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]).unwrap();
        assert_eq!(p.prob(0, 0, 0), 1.0);
        assert_eq!(p.prob(1, 0, 1), 1.0);
        // past the last table
        assert_eq!(p.prob(7, 0, 1), 1.0);
    }

    #[test]
    fn max_ratio_and_coverage() {
        let pi = FinitePolicy::constant(2, &[0.2, 0.8]).unwrap();
        let mu = FinitePolicy::uniform(2, 2).unwrap();
        assert!((FinitePolicy::max_ratio(&pi, &mu, 5).unwrap() - 1.6).abs() < 1e-15);
        let greedy = FinitePolicy::constant(2, &[1.0, 0.0]).unwrap();
        assert!(matches!(FinitePolicy::max_ratio(&mu, &greedy, 5), Err(Error::Coverage { .. })));
    }
}
