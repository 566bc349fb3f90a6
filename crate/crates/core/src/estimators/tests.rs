use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::seq::SliceRandom;

use super::*;
use crate::env::{model_fail, model_win};
use crate::exact::{exact_marginals, exact_values};
use crate::marginal::{estimate_marginals, MarginalEstimate, MarginalOptions};
use crate::mdp::{
    cumulative_ratios, random_mdp, random_policy, sample_batch, Action, BatchMeta, Episode, EpisodeBatch, FinitePolicy,
    ObservationSchedule, RewardBounds, Step, TabularMdp, TabularSampler,
};
use crate::rng::rng_from_seed;

fn random_batch(seed: u64, n: usize) -> (TabularSampler, EpisodeBatch) {
    let (ns, na, h) = (3 + (seed % 3) as usize, 2 + (seed % 2) as usize, 4 + (seed % 4) as usize);
    let mdp = random_mdp(ns, na, h, seed).unwrap();
    let behavior = random_policy(ns, na, h, seed + 1000).unwrap();
    let target = random_policy(ns, na, h, seed + 2000).unwrap();
    let sampler = TabularSampler::new(mdp, behavior, target).unwrap();
    let batch = sample_batch(&sampler, n, seed, "random").unwrap();
    (sampler, batch)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn clipping() {
    let b = RewardBounds::nonnegative(1.0).unwrap();
    assert_eq!(clip_estimate(3.0, b, 50), 3.0);
    assert_eq!(clip_estimate(-1.0, b, 50), 0.0);
    assert_eq!(clip_estimate(51.0, b, 50), 50.0);
    let signed = RewardBounds::new(-1.0, 1.0).unwrap();
    assert_eq!(clip_estimate(-60.0, signed, 50), -50.0);
    let out = EstimatorOutput::plain(-2.0).clipped(b, 10);
    assert!(out.clipped && out.estimate == 0.0);
    assert!(!EstimatorOutput::plain(2.0).clipped(b, 10).clipped);
}

#[test]
fn ids_round_trip() {
    for id in EstimatorId::ALL {
        assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
    }
    assert!("magic".parse::<EstimatorId>().is_err());
}

#[test]
fn importance_sampling_direct_formulas() {
    for seed in 0..10 {
        let (_, batch) = random_batch(seed, 25);
        let n = batch.len() as f64;
        let cum: Vec<Vec<f64>> = batch.episodes().iter().map(cumulative_ratios).collect();
        let is_direct: f64 =
            batch.episodes().iter().zip(&cum).map(|(ep, c)| ep.steps.iter().zip(c).map(|(st, w)| w * st.reward).sum::<f64>()).sum::<f64>()
                / n;
        assert!(close(naive_is(&batch).unwrap().estimate, is_direct, 1e-12));

        let mut wis_direct = 0.0;
        for t in 0..batch.horizon() {
            let z: f64 = cum.iter().map(|c| c[t]).sum();
            let num: f64 = batch.episodes().iter().zip(&cum).map(|(ep, c)| c[t] * ep.steps[t].reward).sum();
            wis_direct += num / z;
        }
        assert!(close(wis(&batch).unwrap().estimate, wis_direct, 1e-12));
    }
}

#[test]
fn dr_with_zero_q_is_is() {
    for seed in 0..10 {
        let (sampler, batch) = random_batch(seed, 20);
        let zero = QEstimate::zero(sampler.mdp().num_states(), sampler.mdp().num_actions(), batch.horizon());
        assert_eq!(dr(&batch, &zero).unwrap().estimate, naive_is(&batch).unwrap().estimate);
        assert_eq!(wdr(&batch, &zero).unwrap().estimate, wis(&batch).unwrap().estimate);
    }
}

#[test]
fn dr_with_oracle_q_is_exact_on_deterministic_mdp() {
    let (ns, na, h) = (4, 3, 6);
    let mut rng = rng_from_seed(17);
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..h * ns * na {
        let mut row = vec![0.0; ns];
        row[rand::Rng::random_range(&mut rng, 0..ns)] = 1.0;
        transitions.extend(row);
        rewards.extend((0..ns).map(|_| rand::Rng::random::<f64>(&mut rng)));
    }
    let mdp = TabularMdp::new(ns, na, h, vec![0.0, 1.0, 0.0, 0.0], transitions, rewards, RewardBounds::nonnegative(1.0).unwrap()).unwrap();
    let target = random_policy(ns, na, h, 5).unwrap();
    let behavior = FinitePolicy::uniform(ns, na).unwrap();
    let eval = exact_values(&mdp, &target).unwrap();
    let q = QEstimate::from_exact(&eval, na, QProvenance::Oracle);
    let sampler = TabularSampler::new(mdp, behavior, target).unwrap();
    for seed in 0..20 {
        let batch = sample_batch(&sampler, 1 + seed as usize, seed, "det").unwrap();
        assert!((dr(&batch, &q).unwrap().estimate - eval.value).abs() < 1e-12);
    }
}

#[test]
fn wis_zero_normalizer_is_flagged() {
    let st = |s| Step { state: s, action: Action::Discrete(0), reward: 1.0, next_state: s, behavior_density: 0.5, target_density: 0.0 };
    let batch = EpisodeBatch::new(vec![Episode::new(vec![st(0), st(0)]); 3], 1, 2, Some(2), BatchMeta::default()).unwrap();
    let out = wis(&batch).unwrap();
    assert_eq!(out.degenerate_steps, vec![0, 1]);
    assert_eq!(out.estimate, 0.0);
    assert!(naive_is(&batch).unwrap().degenerate_steps.is_empty());
}

#[test]
fn framework_rejects_incomplete_specs() {
    let (_, batch) = random_batch(1, 5);
    assert!(matches!(framework_eval(&batch, &FrameworkSpec::DR, None, None), Err(crate::Error::InvalidSpec(_))));
    assert!(matches!(framework_eval(&batch, &FrameworkSpec::MARGINALIZED, None, None), Err(crate::Error::InvalidSpec(_))));
    let q = QEstimate::zero(2, 2, 2);
    assert!(matches!(dr(&batch, &q), Err(crate::Error::ShapeMismatch(_))));
}

#[test]
fn mis_is_the_marginalized_framework() {
    for seed in 0..10 {
        let (_, batch) = random_batch(seed, 30);
        for opts in [MisOptions::default(), MisOptions::raw()] {
            let m = estimate_marginals(&batch, &MarginalOptions { self_normalize: opts.self_normalize, schedule: None }).unwrap();
            let spec = if opts.reward_table { FrameworkSpec::MARGINALIZED_TABLE } else { FrameworkSpec::MARGINALIZED };
            let direct = framework_eval(&batch, &spec, Some(&m), None).unwrap();
            assert_eq!(mis(&batch, &opts).unwrap().estimate, direct.estimate);
        }
        // A schedule that observes everything changes nothing.
        let full = MisOptions { schedule: Some(ObservationSchedule::fully_observed(batch.horizon()).unwrap()), ..MisOptions::default() };
        assert!(close(mis(&batch, &full).unwrap().estimate, mis(&batch, &MisOptions::default()).unwrap().estimate, 1e-12));
    }
}

#[test]
fn mis_with_unit_ratios_is_the_sample_mean_return() {
    let bundle = model_win(6, 0.4).unwrap();
    let ex = bundle.exact.clone().unwrap();
    let sampler = TabularSampler::new(ex.mdp, ex.behavior.clone(), ex.behavior).unwrap();
    let batch = sample_batch(&sampler, 50, 4, "on-policy").unwrap();
    let mean: f64 = batch.episodes().iter().map(|e| e.total_return()).sum::<f64>() / 50.0;
    assert!(close(mis(&batch, &MisOptions::raw()).unwrap().estimate, mean, 1e-12));
    assert!(close(naive_is(&batch).unwrap().estimate, mean, 1e-12));
}

#[test]
fn mdr_with_zero_q_is_mis_on_the_first_half() {
    for seed in 0..8 {
        let (sampler, batch) = random_batch(seed, 21);
        let zero = QEstimate::zero(sampler.mdp().num_states(), sampler.mdp().num_actions(), batch.horizon());
        let split_seed = 99 + seed;
        let out = mdr_with(&batch, split_seed, &MisOptions::default(), QSource::Fixed(&zero)).unwrap();
        let mut idx: Vec<usize> = (0..batch.len()).collect();
        idx.shuffle(&mut rng_from_seed(split_seed));
        let half = batch.select(&idx[..11]).unwrap();
        assert_eq!(out.estimate, mis(&half, &MisOptions::default()).unwrap().estimate);
    }
    let (_, one) = random_batch(0, 1);
    assert!(mdr(&one, &random_policy(3, 2, 4, 1).unwrap(), 0).is_err());
}

#[test]
fn estimators_approach_model_win_value() {
    let bundle = model_win(8, 0.4).unwrap();
    let target = bundle.estimation_target.clone().unwrap();
    let batch = bundle.sample(4000, 11).unwrap();
    let v = bundle.oracle.value;
    assert!((v - 0.48).abs() < 1e-12);
    for (name, est) in [
        ("is", naive_is(&batch).unwrap().estimate),
        ("wis", wis(&batch).unwrap().estimate),
        ("dm", dm(&batch, &target).unwrap().estimate),
        ("mis", mis(&batch, &MisOptions::default()).unwrap().estimate),
        ("mdr", mdr(&batch, &target, 3).unwrap().estimate),
        ("dr", dr(&batch, &fit_q_model(&batch, &target).unwrap()).unwrap().estimate),
        ("wdr", wdr(&batch, &fit_q_model(&batch, &target).unwrap()).unwrap().estimate),
    ] {
        assert!((est - v).abs() < 0.15, "{name}: {est}");
    }
}

#[test]
fn mis_with_oracle_weights_is_unbiased_per_step() {
    let bundle = model_win(4, 0.4).unwrap();
    let ex = bundle.exact.clone().unwrap();
    let known =
        MarginalEstimate::from_known(exact_marginals(&ex.mdp, &ex.target).unwrap(), exact_marginals(&ex.mdp, &ex.behavior).unwrap())
            .unwrap();
    let batch = bundle.sample(20_000, 8).unwrap();
    let est = framework_eval(&batch, &FrameworkSpec::MARGINALIZED, Some(&known), None).unwrap().estimate;
    assert!((est - bundle.oracle.value).abs() < 0.05, "{est}");
}

#[test]
fn model_fail_separates_dm_from_scheduled_mis() {
    let bundle = model_fail(50, 1.0).unwrap();
    let target = bundle.estimation_target.clone().unwrap();
    let batch = bundle.sample(2000, 5).unwrap();
    let m = mis(&batch, &bundle.mis_options()).unwrap().estimate;
    let d = dm(&batch, &target).unwrap().estimate;
    assert!((m + 15.0).abs() < 1.5, "mis {m}");
    assert!(d.abs() < 3.0, "dm {d}");
}

#[test]
fn ssd_ratio_is_one_on_policy() {
    let mdp = random_mdp(4, 2, 64, 3).unwrap();
    let mdp = mdp_stationary_copy(&mdp);
    let pol = random_policy(4, 2, 1, 9).unwrap();
    let sampler = TabularSampler::new(mdp, pol.clone(), pol).unwrap();
    let batch = sample_batch(&sampler, 1000, 1, "mixing").unwrap();
    let r = ssd_ratio(&batch).unwrap();
    for (s, x) in r.ratio.iter().enumerate() {
        assert!((x - 1.0).abs() < 0.05, "state {s}: {x}");
    }
    let norm: f64 = r.ratio.iter().zip(&r.behavior_average).map(|(a, b)| a * b).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

/// Step-0 tables of `mdp` used at every step.
fn mdp_stationary_copy(mdp: &TabularMdp) -> TabularMdp {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let block = ns * na * ns;
    let uniform = vec![1.0 / ns as f64; ns];
    TabularMdp::stationary(ns, na, mdp.horizon(), uniform, &mdp.transitions_flat()[..block], &mdp.rewards_flat()[..block], mdp.bounds())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn self_normalized_estimates_stay_in_range(seed in 0u64..10_000, n in 1usize..40) {
        let (_, batch) = random_batch(seed, n);
        let h = batch.horizon() as f64;
        for v in [wis(&batch).unwrap().estimate, mis(&batch, &MisOptions::default()).unwrap().estimate] {
            prop_assert!((-1e-12..=h + 1e-12).contains(&v));
        }
    }

    #[test]
    fn framework_specializations_are_bitwise(seed in 0u64..10_000, n in 1usize..30) {
        let (sampler, batch) = random_batch(seed, n);
        let q = fit_q_model(&batch, sampler.target()).unwrap();
        prop_assert_eq!(framework_eval(&batch, &FrameworkSpec::IS, None, None).unwrap(), naive_is(&batch).unwrap());
        prop_assert_eq!(framework_eval(&batch, &FrameworkSpec::WIS, None, None).unwrap(), wis(&batch).unwrap());
        prop_assert_eq!(framework_eval(&batch, &FrameworkSpec::DR, None, Some(&q)).unwrap(), dr(&batch, &q).unwrap());
        prop_assert_eq!(framework_eval(&batch, &FrameworkSpec::WDR, None, Some(&q)).unwrap(), wdr(&batch, &q).unwrap());
    }
}
