use alloc::vec;
use alloc::vec::Vec;

use super::EstimatorOutput;
use crate::mdp::EpisodeBatch;
use crate::spectral::eigenvector_nearest_one;
use crate::{Error, Result};

/// Estimated stationary state ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SsdRatio {
    /// `rho_hat(s)`, 0 for states never seen before the last step.
    pub ratio: Vec<f64>,
    /// Time-averaged behavior visitation over the first `H - 1` steps.
    pub behavior_average: Vec<f64>,
    /// Eigenvalue the ratio was taken from.
    pub eigenvalue: f64,
}

/// Solve `rho = Diag(d_mu)^-1 A rho` for the time-averaged, ratio-weighted
/// transition counts `A[s', s]`, normalized so `sum_s d_mu(s) rho(s) = 1`.
pub fn ssd_ratio(batch: &EpisodeBatch) -> Result<SsdRatio> {
    let h = batch.horizon();
    if h < 2 {
        return Err(Error::InvalidArgument("stationary ratios need a horizon of at least 2".into()));
    }
    let ns = batch.num_states();
    let scale = 1.0 / (batch.len() as f64 * (h - 1) as f64);
    let mut d = vec![0.0; ns];
    let mut a = vec![0.0; ns * ns];
    for ep in batch.episodes() {
        for st in &ep.steps[..h - 1] {
            d[st.state] += scale;
            a[st.next_state * ns + st.state] += scale * st.ratio();
        }
    }
    let visited: Vec<usize> = (0..ns).filter(|&s| d[s] > 0.0).collect();
    let m = visited.len();
    let mut mat = vec![0.0; m * m];
    for (i, &sn) in visited.iter().enumerate() {
        for (j, &s) in visited.iter().enumerate() {
            mat[i * m + j] = a[sn * ns + s] / d[sn];
        }
    }
    let (eigenvalue, v) = eigenvector_nearest_one(&mat, m)?;
    let norm: f64 = visited.iter().zip(&v).map(|(&s, x)| d[s] * x).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Spectral("stationary ratio cannot be normalized".into()));
    }
    let mut ratio = vec![0.0; ns];
    for (&s, x) in visited.iter().zip(&v) {
        ratio[s] = x / norm;
    }
    Ok(SsdRatio { ratio, behavior_average: d, eigenvalue })
}

/// `1/n sum_i sum_t rho_hat(s_t) rho_t r_t`.
pub fn ssd_is(batch: &EpisodeBatch) -> Result<EstimatorOutput> {
    let r = ssd_ratio(batch)?;
    let total: f64 = batch.episodes().iter().flat_map(|ep| &ep.steps).map(|st| r.ratio[st.state] * st.ratio() * st.reward).sum();
    Ok(EstimatorOutput::plain(total / batch.len() as f64))
}
