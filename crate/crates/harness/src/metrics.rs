//! Per-cell error metrics with bootstrap intervals.

use mis_ope_core::rng::rng_from_seed;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Metric;
use crate::error::{HarnessError, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 2000;
pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// False when a relative metric fell back to its absolute form because
    /// the true value is 0.
    pub normalized: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn rmse(xs: &[f64], oracle: f64) -> f64 {
    (xs.iter().map(|x| (x - oracle).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn statistic(metric: Metric, xs: &[f64], oracle: f64) -> f64 {
    match metric {
        Metric::RelativeRmse if oracle != 0.0 => rmse(xs, oracle) / oracle.abs(),
        Metric::RelativeRmse | Metric::Rmse => rmse(xs, oracle),
        Metric::Bias => mean(xs) - oracle,
        Metric::Variance => {
            let m = mean(xs);
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
        }
    }
}

/// Metric over replications with a percentile-bootstrap interval, widened
/// if needed so it contains the point estimate. Estimates are sorted first,
/// which makes the result independent of record order.
pub fn metric_value(metric: Metric, estimates: &[f64], oracle: f64, seed: u64) -> Result<MetricValue> {
    if estimates.len() < 2 {
        return Err(HarnessError::Config(format!("{} needs at least 2 replications, got {}", metric.as_str(), estimates.len())));
    }
    let mut xs = estimates.to_vec();
    xs.sort_by(f64::total_cmp);
    let value = statistic(metric, &xs, oracle);
    let mut rng = rng_from_seed(seed);
    let mut resample = vec![0.0; xs.len()];
    let mut stats: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for r in resample.iter_mut() {
                *r = xs[rng.random_range(0..xs.len())];
            }
            statistic(metric, &resample, oracle)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - CI_LEVEL) / 2.0;
    let lo = stats[(tail * BOOTSTRAP_RESAMPLES as f64).floor() as usize];
    let hi = stats[((1.0 - tail) * BOOTSTRAP_RESAMPLES as f64).ceil() as usize - 1];
    Ok(MetricValue { value, ci_low: lo.min(value), ci_high: hi.max(value), normalized: metric != Metric::RelativeRmse || oracle != 0.0 })
}

/// `sqrt(mean((v_hat - v)^2)) / |v|` with its interval.
pub fn relative_rmse(estimates: &[f64], oracle: f64, seed: u64) -> Result<MetricValue> {
    metric_value(Metric::RelativeRmse, estimates, oracle, seed)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_estimates_have_zero_error() {
        let m = relative_rmse(&[3.0; 10], 3.0, 1).unwrap();
        assert_eq!((m.value, m.ci_low, m.ci_high), (0.0, 0.0, 0.0));
    }

    #[test]
    fn arithmetic_example() {
        let m = relative_rmse(&[3.0, 1.0], 2.0, 1).unwrap();
        assert_eq!(m.value, 0.5);
        assert_eq!(metric_value(Metric::Rmse, &[3.0, 1.0], 2.0, 1).unwrap().value, 1.0);
        assert_eq!(metric_value(Metric::Bias, &[3.0, 1.0], 2.5, 1).unwrap().value, -0.5);
        assert_eq!(metric_value(Metric::Variance, &[3.0, 1.0], 2.0, 1).unwrap().value, 2.0);
    }

    #[test]
    fn zero_oracle_falls_back_to_absolute() {
        let m = relative_rmse(&[1.0, -1.0], 0.0, 1).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(!m.normalized);
        assert!(relative_rmse(&[1.0], 1.0, 1).is_err());
    }

    #[test]
    fn interval_contains_point_and_ignores_order() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.0).collect();
        let mut rev = xs.clone();
        rev.reverse();
        let a = relative_rmse(&xs, 0.7, 9).unwrap();
        assert!(a.ci_low <= a.value && a.value <= a.ci_high);
        assert!(a.ci_low < a.ci_high);
        assert_eq!(a, relative_rmse(&rev, 0.7, 9).unwrap());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }
}
