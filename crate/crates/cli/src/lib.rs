//! Command implementations behind the `adaregret` binary.

pub mod config;
pub mod trace_io;

use std::io::Write;
use std::path::{Path, PathBuf};

use adaregret::harness::{audit_run, run, AuditReport, RunParams, RunTrace};
use adaregret::intervals::{
    cgc_cover, cover_length_bound, marker_cover, render_cgc, render_cpgc, render_gc, render_pgc,
};
use adaregret::LossFunction;
use rayon::prelude::*;
use serde::Serialize;

use config::RunConfig;
use trace_io::{Manifest, MANIFEST_FILE, SUMMARY_FILE};

pub const THREADS_ENV: &str = "ADAREGRET_THREADS";

/// Largest horizon the interval dumps accept.
pub const MAX_DUMP_HORIZON: usize = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("trace does not match config: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Core(#[from] adaregret::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Violation,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Violation => 1,
        }
    }
}

pub const ERROR_CODE: i32 = 2;

/// Contents of `summary.json`, and of `audit`'s standard output.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub seed: u64,
    pub scenario_sha256: &'a str,
    pub config: &'a RunConfig,
    pub params: &'a RunParams,
    pub audit: &'a AuditReport,
}

pub fn render_summary(summary: &Summary<'_>) -> String {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    text
}

/// Cap the global worker pool when `ADAREGRET_THREADS` is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Prepared {
    losses: Vec<LossFunction>,
    params: RunParams,
    manifest: Manifest,
    stages: Vec<(usize, usize)>,
}

fn prepare(config: &RunConfig, seed: u64) -> Result<Prepared, CliError> {
    let scenario = config.scenario_for(seed);
    let losses = scenario.generate()?;
    let params = RunParams::resolve(&config.learner_spec(), &scenario.domain, &losses)?;
    let manifest = Manifest::new(&params, &scenario, seed);
    Ok(Prepared {
        losses,
        params,
        manifest,
        stages: scenario.stage_ranges(),
    })
}

fn audit_prepared(config: &RunConfig, prep: &Prepared, trace: &RunTrace) -> Result<AuditReport, CliError> {
    Ok(audit_run(trace, &config.scenario.domain, &prep.losses, &prep.stages, &config.audit)?)
}

fn run_one(config: &RunConfig, seed: u64, dir: &Path) -> Result<(Outcome, String), CliError> {
    let prep = prepare(config, seed)?;
    let trace = run(&config.learner_spec(), &config.scenario.domain, &prep.losses)?;
    let report = audit_prepared(config, &prep, &trace)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    trace_io::write_trace(dir, &trace)?;
    trace_io::write_json(&dir.join(MANIFEST_FILE), &prep.manifest)?;
    let summary = Summary {
        seed,
        scenario_sha256: &prep.manifest.scenario_sha256,
        config,
        params: &prep.params,
        audit: &report,
    };
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, render_summary(&summary)).map_err(|e| CliError::io(&path, e))?;
    let outcome = if report.passed { Outcome::Pass } else { Outcome::Violation };
    Ok((outcome, status_lines(&report, seed, dir)))
}

fn status_lines(report: &AuditReport, seed: u64, dir: &Path) -> String {
    let mut out = format!(
        "{} seed={} T={} -> {} ({} violations) in {}\n",
        report.learner.as_str(),
        seed,
        report.horizon,
        if report.passed { "PASS" } else { "FAIL" },
        report.violations,
        dir.display()
    );
    for c in &report.checks {
        let worst = match (&c.worst_margin, &c.worst_at) {
            (Some(m), Some(at)) => format!("worst margin {m:.6} at {at}"),
            _ => "no checks".to_string(),
        };
        out.push_str(&format!(
            "  {:<18} {:>7} checks {:>5} violations {:>4} excluded  {worst}\n",
            c.name, c.checks, c.violations, c.excluded
        ));
    }
    if !report.range_violations.is_empty() {
        out.push_str(&format!(
            "  {} losses outside [0, 1]; bound guarantees void\n",
            report.range_violations.len()
        ));
    }
    out
}

/// `run --config F --out DIR [--seed N]`.
pub fn cmd_run(config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome, CliError> {
    let config = RunConfig::load(config_path)?;
    let out: PathBuf = match (out, &config.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => return Err(CliError::Config("no output directory: pass --out or set `output_dir`".into())),
    };
    let base = config.base_seed(seed);
    let jobs: Vec<(u64, PathBuf)> = if config.replicates == 1 {
        vec![(base, out)]
    } else {
        (0..config.replicates as u64)
            .map(|k| (base + k, out.join(format!("seed-{}", base + k))))
            .collect()
    };
    let results: Vec<Result<(Outcome, String), CliError>> =
        jobs.par_iter().map(|(s, dir)| run_one(&config, *s, dir)).collect();
    let mut outcome = Outcome::Pass;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for res in results {
        let (o, text) = res?;
        let _ = lock.write_all(text.as_bytes());
        if o == Outcome::Violation {
            outcome = Outcome::Violation;
        }
    }
    Ok(outcome)
}

/// `audit --trace F --config F`: the summary goes to standard output.
pub fn cmd_audit(trace_path: &Path, config_path: &Path) -> Result<(Outcome, String), CliError> {
    let config = RunConfig::load(config_path)?;
    let dir = trace_path.parent().unwrap_or(Path::new("."));
    let manifest = trace_io::read_manifest(&dir.join(MANIFEST_FILE))?;
    let prep = prepare(&config, manifest.seed)?;
    if prep.manifest != manifest {
        return Err(CliError::Mismatch(format!(
            "run manifest {} does not describe this config (scenario hash {} vs {})",
            dir.join(MANIFEST_FILE).display(),
            manifest.scenario_sha256,
            prep.manifest.scenario_sha256
        )));
    }
    let trace = trace_io::read_trace(trace_path, prep.params.clone(), manifest.horizon)?;
    let report = audit_prepared(&config, &prep, &trace)?;
    let summary = Summary {
        seed: manifest.seed,
        scenario_sha256: &manifest.scenario_sha256,
        config: &config,
        params: &prep.params,
        audit: &report,
    };
    let outcome = if report.passed { Outcome::Pass } else { Outcome::Violation };
    Ok((outcome, render_summary(&summary)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum IntervalKind {
    Gc,
    Cgc,
    Pgc,
    Cpgc,
}

/// `intervals --kind K --horizon N [--markers ...]`.
pub fn cmd_intervals(kind: IntervalKind, horizon: usize, markers: &[usize]) -> Result<String, CliError> {
    if horizon == 0 || horizon > MAX_DUMP_HORIZON {
        return Err(CliError::Config(format!("horizon must be in 1..={MAX_DUMP_HORIZON}, got {horizon}")));
    }
    let needs_markers = matches!(kind, IntervalKind::Pgc | IntervalKind::Cpgc);
    if needs_markers {
        if markers.first() != Some(&1) || markers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("markers must start at 1 and increase strictly".into()));
        }
    } else if !markers.is_empty() {
        return Err(CliError::Config("markers only apply to pgc and cpgc".into()));
    }
    Ok(match kind {
        IntervalKind::Gc => render_gc(horizon),
        IntervalKind::Cgc => render_cgc(horizon),
        IntervalKind::Pgc => render_pgc(markers, horizon),
        IntervalKind::Cpgc => render_cpgc(markers, horizon),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CoverKind {
    /// Rounds covered by CGC intervals.
    Cgc,
    /// Marker indices covered by CPGC intervals.
    Cpgc,
}

/// `cover --kind K --from R --to S`.
pub fn cmd_cover(kind: CoverKind, r: usize, s: usize) -> Result<String, CliError> {
    let cover = match kind {
        CoverKind::Cgc => cgc_cover(r, s)?,
        CoverKind::Cpgc => marker_cover(r, s)?,
    };
    Ok(format!("{cover}  v={} ≤ {}\n", cover.len(), cover_length_bound(r, s)))
}

/// `template --learner L`.
pub fn cmd_template(learner: adaregret::LearnerKind) -> String {
    let mut text = serde_json::to_string_pretty(&RunConfig::template(learner)).expect("config serializes");
    text.push('\n');
    text
}
