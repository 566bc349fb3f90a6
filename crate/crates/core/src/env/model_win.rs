use alloc::vec;

use super::{BenchmarkBundle, EnvId, ExactModel, Oracle, OracleProvenance, Sampler, StateMask};
use crate::exact::exact_values;
use crate::mdp::{FinitePolicy, ObservationSchedule, RewardBounds, TabularMdp, TabularSampler};
use crate::{Error, Result};

const TARGET: [f64; 2] = [0.2, 0.8];

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon < 2 {
        return Err(Error::InvalidArgument(alloc::format!("horizon {horizon} is below 2")));
    }
    Ok(())
}

/// Three states `s1 = 0`, `s2 = 1`, `s3 = 2`. From `s1` action 0 moves to
/// `s2` with probability `p` (else `s3`) and action 1 the other way round;
/// `s2` and `s3` return to `s1`. `rewards[s]` is paid on arriving in `s`.
fn skeleton(horizon: usize, p: f64, rewards_on_arrival: [f64; 3]) -> Result<TabularMdp> {
    let q = 1.0 - p;
    #[rustfmt::skip]
    let transitions = [
        0.0, p, q,    0.0, q, p,
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
    ];
    let rewards: alloc::vec::Vec<f64> = (0..3 * 2).flat_map(|_| rewards_on_arrival).collect();
    TabularMdp::stationary(3, 2, horizon, vec![1.0, 0.0, 0.0], &transitions, &rewards, RewardBounds::new(-1.0, 1.0)?)
}

fn bundle_from_model(id: EnvId, mdp: TabularMdp) -> Result<BenchmarkBundle> {
    let target = FinitePolicy::constant(3, &TARGET)?;
    let behavior = FinitePolicy::uniform(3, 2)?;
    let oracle = Oracle { value: exact_values(&mdp, &target)?.value, provenance: OracleProvenance::ExactDp };
    let bounds = mdp.bounds();
    Ok(BenchmarkBundle {
        id,
        sampler: Sampler::Tabular(TabularSampler::new(mdp.clone(), behavior.clone(), target.clone())?),
        schedule: None,
        oracle,
        bounds,
        exact: Some(ExactModel { mdp, target: target.clone(), behavior }),
        mask: None,
        estimation_target: Some(target),
    })
}

/// Rewards `+1` on entering `s2` and `-1` on entering `s3`.
pub fn model_win(horizon: usize, p: f64) -> Result<BenchmarkBundle> {
    check_horizon(horizon)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("transition probability {p} outside (0, 1)")));
    }
    bundle_from_model(EnvId::ModelWin, skeleton(horizon, p, [0.0, 1.0, -1.0])?)
}

/// Same skeleton but `s2` and `s3` are reported as one unobservable state
/// and the reward arrives on the way back to `s1`: `+1` from `s2`, `-1`
/// from `s3`. Only even (0-based) steps reveal the state.
pub fn model_fail(horizon: usize, p: f64) -> Result<BenchmarkBundle> {
    check_horizon(horizon)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("transition probability {p} outside (0, 1]")));
    }
    let q = 1.0 - p;
    #[rustfmt::skip]
    let transitions = [
        0.0, p, q,    0.0, q, p,
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
    ];
    #[rustfmt::skip]
    let rewards = [
        0.0, 0.0, 0.0,  0.0, 0.0, 0.0,
        1.0, 0.0, 0.0,  1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, -1.0, 0.0, 0.0,
    ];
    let mdp = TabularMdp::stationary(3, 2, horizon, vec![1.0, 0.0, 0.0], &transitions, &rewards, RewardBounds::new(-1.0, 1.0)?)?;
    let mut bundle = bundle_from_model(EnvId::ModelFail, mdp)?;
    bundle.schedule = Some(ObservationSchedule::periodic(horizon, 2)?);
    bundle.mask = Some(StateMask { num_observed: 2, map: vec![0, 1, 1] });
    bundle.estimation_target = Some(FinitePolicy::constant(2, &TARGET)?);
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_marginals;

    #[test]
    fn model_win_value_matches_cycle_count() {
        let b = model_win(50, 0.4).unwrap();
        // 25 visits to s1, each worth 0.6 (1 - 2p) in expectation
        assert!((b.oracle.value - 25.0 * 0.6 * (1.0 - 2.0 * 0.4)).abs() < 1e-12);
        assert!((b.oracle.value - 3.0).abs() < 1e-9);
        assert_eq!(model_win(50, 0.5).unwrap().oracle.value, 0.0);
        assert!(model_win(8, 1.0).is_err());
        assert!(model_win(1, 0.4).is_err());
    }

    #[test]
    fn model_win_second_marginal() {
        let b = model_win(4, 0.4).unwrap();
        let ex = b.exact.unwrap();
        let d = exact_marginals(&ex.mdp, &ex.target).unwrap();
        assert_eq!(d[0], vec![1.0, 0.0, 0.0]);
        for (x, y) in d[1].iter().zip([0.0, 0.56, 0.44]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn model_fail_value_and_schedule() {
        let b = model_fail(50, 1.0).unwrap();
        assert!((b.oracle.value + 15.0).abs() < 1e-9);
        let sch = b.schedule.as_ref().unwrap();
        assert_eq!(&sch.checkpoints()[..3], &[0, 2, 4]);
        let batch = b.sample(16, 1).unwrap();
        assert_eq!(batch.num_states(), 2);
        for ep in batch.episodes() {
            for (t, st) in ep.steps.iter().enumerate() {
                assert_eq!(st.state, t % 2);
                // densities are logged at hidden steps too
                assert!(st.behavior_density == 0.5);
            }
        }
    }

    #[test]
    fn model_win_alternates_through_s1() {
        let b = model_win(10, 0.4).unwrap();
        let batch = b.sample(128, 9).unwrap();
        let mut hits = 0;
        for ep in batch.episodes() {
            for (t, st) in ep.steps.iter().enumerate() {
                assert_eq!(st.state == 0, t % 2 == 0);
            }
            hits += (ep.steps[1].state == 1) as usize;
        }
        // d_2(s2) = 0.5 under uniform behavior; 3 sigma of a binomial(128, 0.5)
        assert!((hits as f64 - 64.0).abs() <= 3.0 * (128.0f64 * 0.25).sqrt());
    }
}
