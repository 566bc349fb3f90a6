use mis_ope::output::{summarize, write_csv, write_summary};
use mis_ope::{run_experiment, EnvConfig, ExperimentConfig, Metric, ResultRecord};
use mis_ope_core::estimators::EstimatorId;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        EnvConfig::ModelWin { p: 0.4 },
        &[EstimatorId::Is, EstimatorId::Wis, EstimatorId::Mis, EstimatorId::Dm],
        vec![32, 128],
        vec![8],
    );
    cfg.replications = 6;
    cfg.seed = 17;
    cfg
}

fn strip_timing(records: &[ResultRecord]) -> Vec<ResultRecord> {
    records.iter().cloned().map(|r| ResultRecord { wall_ms: 0.0, ..r }).collect()
}

#[test]
fn reruns_and_worker_counts_agree() {
    let cfg = small_config();
    let a = run_experiment(&cfg, Some(1)).unwrap();
    let b = run_experiment(&cfg, Some(4)).unwrap();
    assert_eq!(a.records.len(), 4 * 2 * 6);
    assert_eq!(strip_timing(&a.records), strip_timing(&b.records));
    assert_eq!(a.attrition(), 0.0);
}

#[test]
fn estimators_share_each_batch() {
    let out = run_experiment(&small_config(), Some(2)).unwrap();
    for task in out.records.chunks(4) {
        assert!(task.iter().all(|r| r.seed == task[0].seed && r.n == task[0].n));
    }
    let seeds: std::collections::BTreeSet<u64> = out.records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 12);
}

#[test]
fn outputs_are_byte_stable() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let records = strip_timing(&run_experiment(&cfg, Some(k + 1)).unwrap().records);
        let summary = summarize(&records, Metric::RelativeRmse, cfg.seed).unwrap();
        let (csv, json) = (dir.path().join(format!("r{k}.csv")), dir.path().join(format!("s{k}.json")));
        write_csv(&records, &csv).unwrap();
        write_summary(&summary, &json).unwrap();
        files.push((std::fs::read(csv).unwrap(), std::fs::read(json).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn aggregates_ignore_record_order() {
    let cfg = small_config();
    let mut records = run_experiment(&cfg, None).unwrap().records;
    let before = summarize(&records, Metric::RelativeRmse, 3).unwrap();
    records.reverse();
    let after = summarize(&records, Metric::RelativeRmse, 3).unwrap();
    assert_eq!(serde_json::to_string(&before).unwrap(), serde_json::to_string(&after).unwrap());
}

#[test]
fn unsupported_combinations_count_as_attrition() {
    let mut cfg =
        ExperimentConfig::new(EnvConfig::TimeVaryingChain { target_density: 1.9 }, &[EstimatorId::Mis, EstimatorId::Dm], vec![16], vec![8]);
    cfg.replications = 2;
    let out = run_experiment(&cfg, Some(1)).unwrap();
    assert!((out.attrition() - 0.5).abs() < 1e-12);
    assert!(out.records.iter().filter(|r| r.estimator == "dm").all(|r| r.error.is_some() && r.estimate.is_none()));
}
