//! Parallel replication engine.

use std::time::Instant;

use mis_ope_core::env::{BenchmarkBundle, OracleProvenance};
use mis_ope_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::registry::{build_bundle, run_estimator};

/// One estimator evaluated on one replication of one grid cell. The CSV
/// schema is the serialized field list minus the skipped fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub env: String,
    pub estimator: String,
    pub n: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub seed: u64,
    /// `None` when the estimator failed on this replication.
    pub estimate: Option<f64>,
    pub oracle: f64,
    pub clipped: bool,
    pub wall_ms: f64,
    #[serde(skip)]
    pub degenerate_steps: usize,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Ground truth of one environment instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub env: String,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub value: f64,
    pub provenance: String,
    pub standard_error: f64,
}

impl OracleInfo {
    pub fn from_bundle(bundle: &BenchmarkBundle) -> Self {
        let provenance = match bundle.oracle.provenance {
            OracleProvenance::ExactDp => "exact-dp".to_string(),
            OracleProvenance::ClosedForm => "closed-form".to_string(),
            OracleProvenance::MonteCarlo { episodes, .. } => format!("monte-carlo ({episodes} episodes)"),
        };
        Self {
            env: bundle.id.as_str().to_string(),
            horizon: bundle.horizon(),
            value: bundle.oracle.value,
            provenance,
            standard_error: bundle.oracle.standard_error(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    pub oracles: Vec<OracleInfo>,
}

impl RunOutput {
    /// Fraction of estimator runs that failed.
    pub fn attrition(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.estimate.is_none()).count() as f64 / self.records.len() as f64
    }
}

/// Seed of replication `rep` in cell `(n, H)`, derived from the values
/// rather than grid positions so editing the grid leaves other cells alone.
pub fn replication_seed(base: u64, horizon: usize, n: usize, rep: usize) -> u64 {
    derive_seed(base, &[horizon as u64, n as u64, rep as u64])
}

fn run_replication(cfg: &ExperimentConfig, bundle: &BenchmarkBundle, n: usize, rep: usize) -> Vec<ResultRecord> {
    let h = bundle.horizon();
    let seed = replication_seed(cfg.seed, h, n, rep);
    let record = |estimator: &str| ResultRecord {
        env: bundle.id.as_str().to_string(),
        estimator: estimator.to_string(),
        n,
        horizon: h,
        seed,
        estimate: None,
        oracle: bundle.oracle.value,
        clipped: false,
        wall_ms: 0.0,
        degenerate_steps: 0,
        error: None,
    };
    let batch = match bundle.sample(n, seed) {
        Ok(b) => b,
        Err(e) => {
            return cfg
                .estimators
                .iter()
                .map(|spec| ResultRecord { error: Some(format!("sampling: {e}")), ..record(&spec.label) })
                .collect();
        }
    };
    cfg.estimators
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let out = run_estimator(spec, bundle, &batch, seed).map(|o| if cfg.clip { o.clipped(bundle.bounds, h) } else { o });
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            match out {
                Ok(o) => ResultRecord {
                    estimate: Some(o.estimate),
                    clipped: o.clipped,
                    wall_ms,
                    degenerate_steps: o.degenerate_steps.len(),
                    ..record(&spec.label)
                },
                Err(e) => ResultRecord { wall_ms, error: Some(e.to_string()), ..record(&spec.label) },
            }
        })
        .collect()
}

/// Run every (H, n, replication) task. All estimators of a task share one
/// batch. Records come back in grid order whatever the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput> {
    cfg.validate()?;
    let bundles = cfg.horizons.iter().map(|&h| build_bundle(&cfg.environment, h)).collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize, usize)> =
        (0..bundles.len()).flat_map(|b| cfg.n_grid.iter().flat_map(move |&n| (0..cfg.replications).map(move |rep| (b, n, rep)))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let records: Vec<ResultRecord> = pool.install(|| {
        tasks.par_iter().map(|&(b, n, rep)| run_replication(cfg, &bundles[b], n, rep)).collect::<Vec<_>>().into_iter().flatten().collect()
    });
    Ok(RunOutput { records, oracles: bundles.iter().map(OracleInfo::from_bundle).collect() })
}
