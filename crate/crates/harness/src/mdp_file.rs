//! JSON file format for tabular MDPs.
//!
//! ```json
//! {"S": 2, "A": 1, "H": 2, "d1": [1, 0],
//!  "T": [[[[0, 1]], [[0, 1]]], [[[0, 1]], [[0, 1]]]],
//!  "r": [[[[0, 1]], [[0, 0]]], [[[0, 0]], [[0, 0]]]],
//!  "R_max": 1}
//! ```
//!
//! `T[t][s][a]` is a distribution over next states and `r[t][s][a][s']`
//! the reward of that transition. Validation happens while parsing, so
//! errors carry the line and column where the offending value ends.

use std::path::Path;

use mis_ope_core::mdp::{RewardBounds, TabularMdp, SIMPLEX_TOL};
use serde::Deserialize;

use crate::error::{HarnessError, Result};

/// A next-state distribution, checked as soon as it is read.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "Vec<f64>")]
struct ProbRow(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbRow {
    type Error = String;

    fn try_from(row: Vec<f64>) -> std::result::Result<Self, String> {
        if let Some(p) = row.iter().find(|p| !(**p >= 0.0)) {
            return Err(format!("probability {p} is negative"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(format!("probabilities sum to {sum}, expected 1"));
        }
        Ok(ProbRow(row))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMdp {
    #[serde(rename = "S")]
    num_states: usize,
    #[serde(rename = "A")]
    num_actions: usize,
    #[serde(rename = "H")]
    horizon: usize,
    d1: ProbRow,
    #[serde(rename = "T")]
    transitions: Vec<Vec<Vec<ProbRow>>>,
    r: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "R_max")]
    r_max: f64,
}

/// A validated model read from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawMdp")]
pub struct MdpFile(pub TabularMdp);

fn check_len(what: &str, got: usize, want: usize) -> std::result::Result<(), String> {
    if got != want {
        return Err(format!("{what} has {got} entries, expected {want}"));
    }
    Ok(())
}

impl TryFrom<RawMdp> for MdpFile {
    type Error = String;

    fn try_from(raw: RawMdp) -> std::result::Result<Self, String> {
        let (ns, na, h) = (raw.num_states, raw.num_actions, raw.horizon);
        check_len("d1", raw.d1.0.len(), ns)?;
        check_len("T", raw.transitions.len(), h)?;
        check_len("r", raw.r.len(), h)?;
        let mut transitions = Vec::with_capacity(h * ns * na * ns);
        let mut rewards = Vec::with_capacity(h * ns * na * ns);
        for t in 0..h {
            check_len(&format!("T[{t}]"), raw.transitions[t].len(), ns)?;
            check_len(&format!("r[{t}]"), raw.r[t].len(), ns)?;
            for s in 0..ns {
                check_len(&format!("T[{t}][{s}]"), raw.transitions[t][s].len(), na)?;
                check_len(&format!("r[{t}][{s}]"), raw.r[t][s].len(), na)?;
                for a in 0..na {
                    check_len(&format!("T[{t}][{s}][{a}]"), raw.transitions[t][s][a].0.len(), ns)?;
                    check_len(&format!("r[{t}][{s}][{a}]"), raw.r[t][s][a].len(), ns)?;
                    transitions.extend_from_slice(&raw.transitions[t][s][a].0);
                    rewards.extend_from_slice(&raw.r[t][s][a]);
                }
            }
        }
        if !(raw.r_max > 0.0) || !raw.r_max.is_finite() {
            return Err(format!("R_max = {} must be positive", raw.r_max));
        }
        let lo = if rewards.iter().any(|&r| r < 0.0) { -raw.r_max } else { 0.0 };
        let bounds = RewardBounds::new(lo, raw.r_max).map_err(|e| e.to_string())?;
        TabularMdp::new(ns, na, h, raw.d1.0, transitions, rewards, bounds).map(MdpFile).map_err(|e| e.to_string())
    }
}

pub fn parse_mdp(text: &str, origin: &Path) -> Result<TabularMdp> {
    serde_json::from_str::<MdpFile>(text).map(|f| f.0).map_err(|source| HarnessError::Json { path: origin.to_path_buf(), source })
}

pub fn load_mdp(path: &Path) -> Result<TabularMdp> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_mdp(&text, path)
}
