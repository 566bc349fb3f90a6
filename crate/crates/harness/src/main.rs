use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mis_ope::config::{EnvConfig, ExperimentConfig};
use mis_ope::output::{summarize, write_csv, write_summary};
use mis_ope::registry::{build_bundle, env_descriptions, estimator_descriptions};
use mis_ope::runner::{run_experiment, OracleInfo};
use mis_ope::{mdp_file, HarnessError, Result};

/// Off-policy evaluation experiments with marginalized importance sampling.
#[derive(Debug, Parser)]
#[command(name = "ope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment grid from a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for results.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List environment ids.
    ListEnvs,
    /// List estimator ids.
    ListEstimators,
    /// Print the true value of an environment's target policy.
    Oracle {
        env: String,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
        /// Environment parameter as key=value (repeatable).
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Check a JSON model file.
    Validate { path: PathBuf },
}

fn env_from_params(env: &str, params: &[String]) -> Result<EnvConfig> {
    let mut obj = serde_json::Map::new();
    obj.insert("id".into(), env.into());
    for kv in params {
        let (k, v) = kv.split_once('=').ok_or_else(|| HarnessError::Config(format!("parameter {kv:?} is not key=value")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        obj.insert(k.to_string(), value);
    }
    serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| HarnessError::Config(e.to_string()))
}

fn run(config: &Path, workers: Option<usize>, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out_dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;

    let result = run_experiment(&cfg, workers)?;
    let mut summary = summarize(&result.records, cfg.metric, cfg.seed)?;
    summary.oracles = result.oracles.clone();
    write_csv(&result.records, &out_dir.join("results.csv"))?;
    write_summary(&summary, &out_dir.join("summary.json"))?;

    for cell in &summary.cells {
        let m = cell.metric.map(|m| format!("{:.4} [{:.4}, {:.4}]", m.value, m.ci_low, m.ci_high)).unwrap_or_else(|| "n/a".into());
        println!("{:<20} {:<8} H={:<4} n={:<6} {} {m}", cell.env, cell.estimator, cell.horizon, cell.n, cfg.metric.as_str());
    }
    let attrition = result.attrition();
    for r in result.records.iter().filter(|r| r.error.is_some()).take(5) {
        eprintln!("warning: {} failed (n={}, H={}, seed={}): {}", r.estimator, r.n, r.horizon, r.seed, r.error.as_deref().unwrap_or(""));
    }
    if attrition > cfg.attrition_threshold {
        eprintln!("error: {:.1}% of estimator runs failed (threshold {:.1}%)", 100.0 * attrition, 100.0 * cfg.attrition_threshold);
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, workers, seed, out } => return run(&config, workers, seed, out),
        Command::ListEnvs => {
            for (id, desc) in env_descriptions() {
                println!("{:<20} {desc}", id.as_str());
            }
        }
        Command::ListEstimators => {
            for (id, desc) in estimator_descriptions() {
                println!("{:<8} {desc}", id.as_str());
            }
        }
        Command::Oracle { env, horizon, params } => {
            let info = OracleInfo::from_bundle(&build_bundle(&env_from_params(&env, &params)?, horizon)?);
            if info.standard_error > 0.0 {
                println!("{} H={}: {} ± {} ({})", info.env, info.horizon, info.value, info.standard_error, info.provenance);
            } else {
                println!("{} H={}: {} ({})", info.env, info.horizon, info.value, info.provenance);
            }
        }
        Command::Validate { path } => {
            let mdp = mdp_file::load_mdp(&path)?;
            println!(
                "{}: ok (S={}, A={}, H={}, rewards in [{}, {}])",
                path.display(),
                mdp.num_states(),
                mdp.num_actions(),
                mdp.horizon(),
                mdp.bounds().min,
                mdp.bounds().max
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
