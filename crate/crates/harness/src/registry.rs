//! Maps configuration ids to environments and estimator calls.

use mis_ope_core::env::{model_fail, model_win, mountain_car, time_varying_chain_with_density, BenchmarkBundle, EnvId};
use mis_ope_core::estimators::{
    dm, dr, fit_q_model, mdr_with, mis, naive_is, ssd_is, wdr, wis, EstimatorId, EstimatorOutput, MisOptions, QSource,
};
use mis_ope_core::mdp::{EpisodeBatch, FinitePolicy};
use mis_ope_core::rng::derive_seed;
use mis_ope_core::Error;

use crate::config::{EnvConfig, EstimatorSpec};
use crate::error::{HarnessError, Result};

/// One-line descriptions for `list-envs`.
pub fn env_descriptions() -> Vec<(EnvId, &'static str)> {
    vec![
        (EnvId::ModelWin, "3-state loop, reward on entering s2/s3; params: p (default 0.4)"),
        (EnvId::ModelFail, "ModelWin with hidden s2/s3 and delayed reward; params: p (default 1.0)"),
        (EnvId::TimeVaryingChain, "sinking 2-state chain with continuous actions; params: target_density (default 1.9)"),
        (EnvId::MountainCar, "discretized mountain car with Q-learned softmax policies; params: see README"),
    ]
}

pub fn estimator_descriptions() -> Vec<(EstimatorId, &'static str)> {
    vec![
        (EstimatorId::Is, "per-decision importance sampling"),
        (EstimatorId::Wis, "step-wise weighted importance sampling"),
        (EstimatorId::Dr, "doubly robust with a model-based Q fitted on the batch"),
        (EstimatorId::Wdr, "weighted doubly robust"),
        (EstimatorId::Dm, "direct method (backward induction on the empirical model)"),
        (EstimatorId::Mis, "marginalized importance sampling"),
        (EstimatorId::Mdr, "marginalized doubly robust with a 50/50 split"),
        (EstimatorId::SsdIs, "stationary state distribution importance sampling"),
    ]
}

pub fn build_bundle(env: &EnvConfig, horizon: usize) -> Result<BenchmarkBundle> {
    let bundle = match env {
        EnvConfig::ModelWin { p } => model_win(horizon, *p),
        EnvConfig::ModelFail { p } => model_fail(horizon, *p),
        EnvConfig::TimeVaryingChain { target_density } => time_varying_chain_with_density(horizon, *target_density),
        EnvConfig::MountainCar(params) => mountain_car(&params.to_core(horizon)),
    };
    bundle.map_err(|e| match e {
        Error::InvalidArgument(msg) => HarnessError::Config(format!("{}: {msg}", env.id())),
        other => HarnessError::Core(other),
    })
}

fn model_target(bundle: &BenchmarkBundle) -> mis_ope_core::Result<&FinitePolicy> {
    bundle.estimation_target.as_ref().ok_or(Error::ContinuousActions)
}

fn mis_options(spec: &EstimatorSpec, bundle: &BenchmarkBundle) -> MisOptions {
    let mut opts = bundle.mis_options();
    if let Some(v) = spec.self_normalize {
        opts.self_normalize = v;
    }
    if let Some(v) = spec.reward_table {
        opts.reward_table = v;
    }
    if spec.use_schedule == Some(false) {
        opts.schedule = None;
    }
    opts
}

/// Evaluate one estimator on a logged batch. `seed` is the replication
/// seed; MDR derives its split from it.
pub fn run_estimator(
    spec: &EstimatorSpec,
    bundle: &BenchmarkBundle,
    batch: &EpisodeBatch,
    seed: u64,
) -> mis_ope_core::Result<EstimatorOutput> {
    match spec.id {
        EstimatorId::Is => naive_is(batch),
        EstimatorId::Wis => wis(batch),
        EstimatorId::Dr => dr(batch, &fit_q_model(batch, model_target(bundle)?)?),
        EstimatorId::Wdr => wdr(batch, &fit_q_model(batch, model_target(bundle)?)?),
        EstimatorId::Dm => dm(batch, model_target(bundle)?),
        EstimatorId::Mis => mis(batch, &mis_options(spec, bundle)),
        EstimatorId::Mdr => {
            // The split estimator needs every step observed; masked states
            // are used as they are reported.
            let opts = MisOptions { schedule: None, ..mis_options(spec, bundle) };
            mdr_with(batch, derive_seed(seed, &[0x6d6472]), &opts, QSource::Fit(model_target(bundle)?))
        }
        EstimatorId::SsdIs => ssd_is(batch),
    }
}
