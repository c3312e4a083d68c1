use std::path::{Path, PathBuf};

use adaregret::harness::{AuditOptions, LearnerSpec};
use adaregret::{LearnerKind, Scenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_delta() -> f64 {
    adaregret::sogd::DEFAULT_DELTA
}

fn one() -> usize {
    1
}

/// The document read by `run` and `audit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub learner: LearnerKind,
    pub scenario: Scenario,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Marker threshold override for `sacs-cpgc`.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Loss budget of `ogd-constant`; defaults to the hindsight optimum.
    #[serde(default)]
    pub loss_budget: Option<f64>,
    #[serde(default)]
    pub audit: AuditOptions,
    /// Overrides `scenario.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Number of consecutive seeds to run, each in its own subdirectory.
    #[serde(default = "one")]
    pub replicates: usize,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("field `{path}`: {}", e.into_inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: adaregret::Error| CliError::Config(format!("field `{name}`: {e}"));
        self.scenario.validate().map_err(|e| field("scenario", e))?;
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(CliError::Config(format!("field `delta`: must be > 0, got {}", self.delta)));
        }
        if self.threshold.is_some() && self.learner != LearnerKind::SacsCpgc {
            return Err(CliError::Config("field `threshold`: only used by sacs-cpgc".into()));
        }
        if self.loss_budget.is_some() && self.learner != LearnerKind::OgdConstant {
            return Err(CliError::Config("field `loss_budget`: only used by ogd-constant".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("field `replicates`: must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn base_seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(self.scenario.seed)
    }

    /// The scenario as run under `seed`.
    pub fn scenario_for(&self, seed: u64) -> Scenario {
        Scenario {
            seed,
            ..self.scenario.clone()
        }
    }

    pub fn learner_spec(&self) -> LearnerSpec {
        LearnerSpec {
            kind: self.learner,
            delta: self.delta,
            threshold: self.threshold,
            loss_budget: self.loss_budget,
        }
    }

    /// A small runnable example for `learner`.
    pub fn template(learner: LearnerKind) -> Self {
        let domain = adaregret::Domain::unit_ball(2, 1.0).expect("valid ball");
        RunConfig {
            learner,
            scenario: Scenario::piecewise(domain, 1024, 4, 0.05, 7).expect("valid scenario"),
            delta: default_delta(),
            threshold: None,
            loss_budget: None,
            audit: AuditOptions::default(),
            seed: None,
            output_dir: None,
            replicates: 1,
        }
    }
}
