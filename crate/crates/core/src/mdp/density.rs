use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// Piecewise-constant probability density on an interval.
///
/// `breaks` has one more entry than `densities`; piece `k` covers
/// `[breaks[k], breaks[k + 1])` (the last piece also includes its right end).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDensity {
    breaks: Vec<f64>,
    densities: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(breaks: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if densities.is_empty() || breaks.len() != densities.len() + 1 {
            return Err(Error::InvalidPolicy("density needs k pieces and k+1 breakpoints".into()));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPolicy("breakpoints must be strictly increasing".into()));
        }
        if densities.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidPolicy("densities must be nonnegative and finite".into()));
        }
        let mass: f64 = breaks.windows(2).zip(&densities).map(|(w, d)| (w[1] - w[0]) * d).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPolicy(format!("density integrates to {mass}, expected 1")));
        }
        Ok(Self { breaks, densities })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo, hi], alloc::vec![1.0 / (hi - lo)])
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        let k = self.breaks[1..].iter().position(|&b| x < b).unwrap_or(self.densities.len() - 1);
        self.densities[k]
    }

    /// Probability mass of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.breaks
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| {
                let lo = w[0].max(a);
                let hi = w[1].min(b);
                if hi > lo {
                    (hi - lo) * d
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, &d) in self.breaks.windows(2).zip(&self.densities) {
            let m = (w[1] - w[0]) * d;
            if m > 0.0 && u < acc + m {
                return w[0] + (u - acc) / d;
            }
            acc += m;
        }
        // u landed in the rounding gap at the top of the CDF
        let k = self.densities.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        self.breaks[k + 1]
    }
}

/// Stationary continuous-action policy: one density per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPolicy {
    per_state: Vec<PiecewiseDensity>,
}

impl ContinuousPolicy {
    pub fn new(per_state: Vec<PiecewiseDensity>) -> Result<Self> {
        if per_state.is_empty() {
            return Err(Error::InvalidPolicy("no states".into()));
        }
        Ok(Self { per_state })
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn state(&self, s: usize) -> &PiecewiseDensity {
        &self.per_state[s]
    }

    pub fn density(&self, s: usize, a: f64) -> f64 {
        self.per_state[s].density(a)
    }
}

/// Behavior and target densities with a checked ratio bound
/// `pi(a|s) / mu(a|s) <= 1 / eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPolicyPair {
    behavior: ContinuousPolicy,
    target: ContinuousPolicy,
    ratio_bound: f64,
}

impl DensityPolicyPair {
    pub fn new(behavior: ContinuousPolicy, target: ContinuousPolicy) -> Result<Self> {
        if behavior.num_states() != target.num_states() {
            return Err(Error::ShapeMismatch("behavior and target cover different state counts".into()));
        }
        let mut bound = 0.0f64;
        for s in 0..behavior.num_states() {
            let mu = behavior.state(s);
            let pi = target.state(s);
            let mut pts: Vec<f64> = mu.breaks().iter().chain(pi.breaks()).copied().collect();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            for w in pts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let p = pi.density(mid);
                if p > 0.0 {
                    let m = mu.density(mid);
                    if m <= 0.0 {
                        return Err(Error::Coverage { step: 0, state: s });
                    }
                    bound = bound.max(p / m);
                }
            }
        }
        Ok(Self { behavior, target, ratio_bound: bound })
    }

    pub fn behavior(&self) -> &ContinuousPolicy {
        &self.behavior
    }

    pub fn target(&self) -> &ContinuousPolicy {
        &self.target
    }

    /// `1 / eta`.
    pub fn ratio_bound(&self) -> f64 {
        self.ratio_bound
    }

    pub fn ratio(&self, s: usize, a: f64) -> f64 {
        let m = self.behavior.density(s, a);
        if m > 0.0 {
            self.target.density(s, a) / m
        } else {
            0.0
        }
    }
}
