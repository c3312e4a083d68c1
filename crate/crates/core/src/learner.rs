//! The per-round interface shared by every learner.

use serde::{Deserialize, Serialize};

use crate::domain::{DecisionVector, LossFunction};
use crate::error::{Error, Result};
use crate::meta::{ActiveSet, RangeWarning};
use crate::sogd::{ConstantStepOgd, Sogd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Sogd,
    OgdConstant,
    Sacs,
    SacsCpgc,
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Sogd => "sogd",
            LearnerKind::OgdConstant => "ogd-constant",
            LearnerKind::Sacs => "sacs",
            LearnerKind::SacsCpgc => "sacs-cpgc",
        }
    }
}

/// Loss of one expert's own prediction in a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpertLoss {
    pub start: usize,
    pub loss: f64,
}

/// Everything observable about one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInfo {
    pub round: usize,
    pub prediction: DecisionVector,
    pub loss: f64,
    /// Experts that contributed to this round's prediction.
    pub active_experts: usize,
    /// A new marker (restart point) was opened this round.
    pub marker: bool,
    /// One entry per contributing expert, in start order.
    pub expert_losses: Vec<ExpertLoss>,
    pub warnings: Vec<RangeWarning>,
}

pub trait Learner {
    fn kind(&self) -> LearnerKind;

    /// Commit to a decision, observe `f`, and update.
    fn play(&mut self, f: &LossFunction) -> Result<RoundInfo>;
}

fn own_range_warning(loss: f64) -> Vec<RangeWarning> {
    if (0.0..=1.0).contains(&loss) {
        Vec::new()
    } else {
        vec![RangeWarning {
            expert_start: None,
            value: loss,
        }]
    }
}

impl Learner for Sogd {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Sogd
    }

    fn play(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        let step = self.step(f)?;
        Ok(RoundInfo {
            round: self.rounds(),
            prediction: step.prediction,
            loss: step.loss,
            active_experts: 1,
            marker: false,
            expert_losses: Vec::new(),
            warnings: own_range_warning(step.loss),
        })
    }
}

/// Round counter wrapper so the baseline reports rounds like the others.
#[derive(Debug, Clone)]
pub struct OgdBaseline {
    inner: ConstantStepOgd,
    round: usize,
}

impl OgdBaseline {
    pub fn new(inner: ConstantStepOgd) -> Self {
        OgdBaseline { inner, round: 0 }
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }
}

impl Learner for OgdBaseline {
    fn kind(&self) -> LearnerKind {
        LearnerKind::OgdConstant
    }

    fn play(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        let step = self.inner.step(f)?;
        self.round += 1;
        Ok(RoundInfo {
            round: self.round,
            prediction: step.prediction,
            loss: step.loss,
            active_experts: 1,
            marker: false,
            expert_losses: Vec::new(),
            warnings: own_range_warning(step.loss),
        })
    }
}

/// Weighted average of the active experts' decisions.
pub(crate) fn combine(active: &ActiveSet, probabilities: &[f64]) -> DecisionVector {
    let dim = active.records()[0].expert.prediction().len();
    let mut w = vec![0.0; dim];
    for (rec, p) in active.records().iter().zip(probabilities) {
        for (x, y) in w.iter_mut().zip(rec.expert.prediction()) {
            *x += p * y;
        }
    }
    w
}

/// Per-expert `(loss, gradient)` at each expert's current decision.
pub(crate) fn evaluate_experts(
    active: &ActiveSet,
    f: &LossFunction,
) -> Result<Vec<(f64, Vec<f64>)>> {
    active
        .records()
        .iter()
        .map(|rec| f.eval(rec.expert.prediction()))
        .collect()
}

/// Statistics update and expert forwarding for the survivors of a round.
/// `evals` holds the surviving experts' evaluations in record order.
pub(crate) fn finish_round(
    active: &mut ActiveSet,
    learner_loss: f64,
    evals: Vec<(f64, Vec<f64>)>,
) -> Result<Vec<RangeWarning>> {
    let losses: Vec<f64> = evals.iter().map(|(l, _)| *l).collect();
    let warnings = active.update_records(learner_loss, &losses)?;
    for (rec, (loss, grad)) in active.records_mut().iter_mut().zip(evals) {
        rec.expert.step_with(loss, &grad)?;
    }
    Ok(warnings)
}

pub(crate) fn double_predict() -> Error {
    Error::contract("predict called twice without an intervening update")
}

pub(crate) fn update_without_predict() -> Error {
    Error::contract("update called before predict")
}
