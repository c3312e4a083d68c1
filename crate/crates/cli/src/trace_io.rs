//! CSV and manifest files of a run directory.
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`, so a re-audit sees bit-identical losses.

use std::path::Path;

use adaregret::harness::{RoundRecord, RunParams, RunTrace};
use adaregret::{LearnerKind, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TRACE_FILE: &str = "trace.csv";
pub const EXPERTS_FILE: &str = "experts.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "run.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    round: usize,
    learner_loss: f64,
    cumulative_loss: f64,
    active_experts: usize,
    marker_flag: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExpertRow {
    expert_start: usize,
    round: usize,
    loss: f64,
}

/// Identifies the run a trace belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub learner: LearnerKind,
    pub seed: u64,
    pub horizon: usize,
    pub scenario_sha256: String,
    pub threshold: Option<f64>,
    pub loss_budget: Option<f64>,
}

impl Manifest {
    pub fn new(params: &RunParams, scenario: &Scenario, seed: u64) -> Self {
        Manifest {
            learner: params.kind,
            seed,
            horizon: scenario.horizon,
            scenario_sha256: scenario_hash(scenario),
            threshold: params.threshold,
            loss_budget: params.loss_budget,
        }
    }
}

pub fn scenario_hash(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_trace(dir: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let path = dir.join(TRACE_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    for r in &trace.rounds {
        w.serialize(TraceRow {
            round: r.round,
            learner_loss: r.loss,
            cumulative_loss: r.cumulative_loss,
            active_experts: r.active_experts,
            marker_flag: r.marker as u8,
        })
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = dir.join(EXPERTS_FILE);
    // Header written by hand so that runs without experts still have one.
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(|e| csv_err(&path, e))?;
    w.write_record(["expert_start", "round", "loss"]).map_err(|e| csv_err(&path, e))?;
    for e in &trace.experts {
        for (k, &loss) in e.losses.iter().enumerate() {
            w.serialize(ExpertRow {
                expert_start: e.start,
                round: e.start + k,
                loss,
            })
            .map_err(|e| csv_err(&path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = dir.join(PREDICTIONS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let dim = trace.rounds.first().map_or(0, |r| r.prediction.len());
    let mut header = vec!["round".to_string()];
    header.extend((1..=dim).map(|k| format!("w{k}")));
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for r in &trace.rounds {
        let mut row = vec![r.round.to_string()];
        row.extend(r.prediction.iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(())
}

/// Read `trace.csv` and the `experts.csv` beside it; `horizon` is the
/// number of rounds the trace must have.
pub fn read_trace(trace_path: &Path, params: RunParams, horizon: usize) -> Result<RunTrace, CliError> {
    let mut rd = csv::Reader::from_path(trace_path).map_err(|e| csv_err(trace_path, e))?;
    let mut rounds = Vec::new();
    for row in rd.deserialize::<TraceRow>() {
        let row = row.map_err(|e| csv_err(trace_path, e))?;
        rounds.push(RoundRecord {
            round: row.round,
            loss: row.learner_loss,
            cumulative_loss: row.cumulative_loss,
            active_experts: row.active_experts,
            marker: row.marker_flag != 0,
            prediction: Vec::new(),
        });
    }
    if rounds.len() != horizon {
        return Err(CliError::Mismatch(format!(
            "{} has {} rounds, the scenario has {horizon}",
            trace_path.display(),
            rounds.len()
        )));
    }
    let dir = trace_path.parent().unwrap_or(Path::new("."));
    let path = dir.join(EXPERTS_FILE);
    let mut rd = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
    let mut experts = Vec::new();
    for row in rd.deserialize::<ExpertRow>() {
        let row = row.map_err(|e| csv_err(&path, e))?;
        experts.push((row.expert_start, row.round, row.loss));
    }
    RunTrace::from_rows(params, rounds, experts)
        .map_err(|e| CliError::Mismatch(format!("{}: {e}", trace_path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
