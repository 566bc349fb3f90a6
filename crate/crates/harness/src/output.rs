//! CSV records and the JSON summary.

use std::collections::BTreeMap;
use std::path::Path;

use mis_ope_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::config::Metric;
use crate::error::{HarnessError, Result};
use crate::metrics::{metric_value, MetricValue, BOOTSTRAP_RESAMPLES, CI_LEVEL};
use crate::runner::{OracleInfo, ResultRecord};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 9] = ["env", "estimator", "n", "H", "seed", "estimate", "oracle", "clipped", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiMethod {
    pub method: String,
    pub resamples: usize,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub env: String,
    pub estimator: String,
    pub n: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub oracle: f64,
    pub replications: usize,
    pub succeeded: usize,
    pub attrition: f64,
    pub mean_estimate: Option<f64>,
    /// `None` with fewer than two successful replications.
    pub metric: Option<MetricValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub metric: Metric,
    pub ci: CiMethod,
    pub oracles: Vec<OracleInfo>,
    pub cells: Vec<CellSummary>,
}

fn label_hash(s: &str) -> u64 {
    // FNV-1a: stable across platforms and releases.
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Per-cell aggregates. Cells are ordered by key and each bootstrap is
/// seeded from its key, so the result does not depend on record order.
pub fn summarize(records: &[ResultRecord], metric: Metric, seed: u64) -> Result<Summary> {
    let mut cells: BTreeMap<(String, usize, usize, String), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.env.clone(), r.horizon, r.n, r.estimator.clone())).or_default().push(r);
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((env, horizon, n, estimator), rs) in cells {
        let oracle = rs[0].oracle;
        if rs.iter().any(|r| r.oracle != oracle) {
            return Err(HarnessError::Config(format!("cell {env}/{estimator}/n={n}/H={horizon} mixes oracle values")));
        }
        let estimates: Vec<f64> = rs.iter().filter_map(|r| r.estimate).collect();
        let cell_seed = derive_seed(seed, &[label_hash(&env), label_hash(&estimator), n as u64, horizon as u64]);
        let metric_value = if estimates.len() >= 2 { Some(metric_value(metric, &estimates, oracle, cell_seed)?) } else { None };
        let mut sorted = estimates.clone();
        sorted.sort_by(f64::total_cmp);
        out.push(CellSummary {
            env,
            estimator,
            n,
            horizon,
            oracle,
            replications: rs.len(),
            succeeded: estimates.len(),
            attrition: 1.0 - estimates.len() as f64 / rs.len() as f64,
            mean_estimate: (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64),
            metric: metric_value,
        });
    }
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        metric,
        ci: CiMethod { method: "percentile bootstrap over replications".into(), resamples: BOOTSTRAP_RESAMPLES, level: CI_LEVEL },
        oracles: Vec::new(),
        cells: out,
    })
}

pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(HarnessError::Config(format!("{}: unexpected columns {:?}", path.display(), headers)));
    }
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<ResultRecord>, _>>()?)
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(estimator: &str, seed: u64, estimate: Option<f64>) -> ResultRecord {
        ResultRecord {
            env: "model-win".into(),
            estimator: estimator.into(),
            n: 32,
            horizon: 8,
            seed,
            estimate,
            oracle: 0.48,
            clipped: false,
            wall_ms: 0.25,
            degenerate_steps: 0,
            error: None,
        }
    }

    fn sample_records() -> Vec<ResultRecord> {
        let mut v = Vec::new();
        for s in 0..6 {
            v.push(rec("is", s, Some(0.48 + 0.1 * (s as f64 - 2.5) + 1.0 / 3.0)));
            v.push(rec("mis", s, if s == 3 { None } else { Some(0.5 - 0.01 * s as f64) }));
        }
        v
    }

    #[test]
    fn empty_summary_is_a_document() {
        let s = summarize(&[], Metric::RelativeRmse, 0).unwrap();
        assert!(s.cells.is_empty());
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"schema_version\":1"));
    }

    #[test]
    fn csv_round_trip_reproduces_aggregates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let records = sample_records();
        write_csv(&records, &path).unwrap();
        let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, CSV_COLUMNS.join(","));
        let back = read_csv(&path).unwrap();
        assert_eq!(back, records);
        assert_eq!(summarize(&back, Metric::RelativeRmse, 4).unwrap(), summarize(&records, Metric::RelativeRmse, 4).unwrap());
    }

    #[test]
    fn summary_reports_attrition_and_ignores_order() {
        let records = sample_records();
        let mut shuffled = records.clone();
        shuffled.reverse();
        let a = summarize(&records, Metric::RelativeRmse, 1).unwrap();
        assert_eq!(a, summarize(&shuffled, Metric::RelativeRmse, 1).unwrap());
        let mis = a.cells.iter().find(|c| c.estimator == "mis").unwrap();
        assert_eq!((mis.replications, mis.succeeded), (6, 5));
        assert!((mis.attrition - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn summary_file_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let s = summarize(&sample_records(), Metric::Rmse, 2).unwrap();
        write_summary(&s, &p1).unwrap();
        write_summary(&summarize(&sample_records(), Metric::Rmse, 2).unwrap(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn empty_csv_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&[], &path).unwrap();
        assert!(read_csv(&path).unwrap().is_empty());
    }
}
