use super::framework::{framework_eval, FrameworkSpec, QEstimate};
use super::EstimatorOutput;
use crate::mdp::EpisodeBatch;
use crate::Result;

/// Trajectory-wise importance sampling `1/n sum_i sum_t rho_{0:t}^i r_t^i`.
pub fn naive_is(batch: &EpisodeBatch) -> Result<EstimatorOutput> {
    framework_eval(batch, &FrameworkSpec::IS, None, None)
}

/// Step-wise weighted importance sampling.
pub fn wis(batch: &EpisodeBatch) -> Result<EstimatorOutput> {
    framework_eval(batch, &FrameworkSpec::WIS, None, None)
}

/// Doubly robust estimator with control variate from `q`.
pub fn dr(batch: &EpisodeBatch, q: &QEstimate) -> Result<EstimatorOutput> {
    framework_eval(batch, &FrameworkSpec::DR, None, Some(q))
}

/// Weighted doubly robust estimator.
pub fn wdr(batch: &EpisodeBatch, q: &QEstimate) -> Result<EstimatorOutput> {
    framework_eval(batch, &FrameworkSpec::WDR, None, Some(q))
}
