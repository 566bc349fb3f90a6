//! Nonstationary finite-state episodic MDPs, policies and logged data.
//!
//! Step indices in this module are 0-based: `t` in `0..horizon` addresses
//! the `t + 1`-th decision of an episode.

mod density;
mod episode;
mod model;
mod policy;
mod random;
mod sampling;
mod schedule;

pub use density::{ContinuousPolicy, DensityPolicyPair, PiecewiseDensity};
pub use episode::{cumulative_ratios, Action, BatchMeta, Episode, EpisodeBatch, Step};
pub use model::{RewardBounds, RewardNoise, TabularMdp};
pub use policy::FinitePolicy;
pub use random::{random_mdp, random_policy};
pub use sampling::{sample_batch, sample_episode, EpisodeSampler, TabularSampler};
pub use schedule::ObservationSchedule;

/// Tolerance for simplex invariants of user-supplied distributions.
pub const SIMPLEX_TOL: f64 = 1e-12;

pub(crate) fn check_simplex(row: &[f64], what: impl FnOnce() -> alloc::string::String) -> crate::Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(crate::Error::InvalidModel(alloc::format!("{}: entry {p} is not a nonnegative finite probability", what())));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(crate::Error::InvalidModel(alloc::format!("{}: sums to {sum}, expected 1", what())));
    }
    Ok(())
}

/// Inverse-CDF draw from a finite pmf given a uniform variate in [0, 1).
pub(crate) fn draw_index(pmf: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left `u` above the accumulated mass.
    last_positive
}
