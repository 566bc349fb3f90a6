//! Replication harness for off-policy evaluation experiments: experiment
//! configuration, a parallel runner with paired batches, relative-RMSE
//! aggregation with bootstrap intervals, CSV/JSON output and the JSON
//! model format read by `ope validate`.

pub mod config;
pub mod error;
pub mod mdp_file;
pub mod metrics;
pub mod output;
pub mod registry;
pub mod runner;

pub use config::{EnvConfig, EstimatorSpec, ExperimentConfig, Metric};
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, ResultRecord, RunOutput};
