use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{check_dim, Error, Result};
use crate::harness::oracle::ComparatorOracle;
use crate::learner::{Learner, LearnerKind, OgdBaseline};
use crate::sacs::Sacs;
use crate::sacs_dyn::{check_threshold, default_threshold, SacsCpgc};
use crate::sogd::{check_delta, ConstantStepOgd, Sogd, DEFAULT_DELTA};

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// What to run, before any scenario-dependent constant is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Marker threshold `C` for `sacs-cpgc`.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Loss budget `L` of the constant-step baseline; defaults to the best
    /// fixed comparator's loss over the whole run.
    #[serde(default)]
    pub loss_budget: Option<f64>,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerSpec {
            kind,
            delta: DEFAULT_DELTA,
            threshold: None,
            loss_budget: None,
        }
    }
}

/// Fully resolved constants of a run; enough to rebuild the learner and to
/// evaluate every bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunParams {
    pub kind: LearnerKind,
    pub delta: f64,
    /// Largest smoothness constant among the losses.
    pub h: f64,
    pub d: f64,
    pub threshold: Option<f64>,
    pub loss_budget: Option<f64>,
    /// `B = D/√2` of the constant-step baseline.
    pub radius_bound: Option<f64>,
}

impl RunParams {
    pub fn resolve(spec: &LearnerSpec, domain: &Domain, losses: &[LossFunction]) -> Result<Self> {
        check_delta(spec.delta)?;
        if losses.is_empty() {
            return Err(Error::invalid("losses", "need at least one round"));
        }
        for f in losses {
            check_dim(domain.dim(), f.dim())?;
        }
        let h = losses.iter().map(|f| f.smoothness()).fold(0.0, f64::max);
        let d = domain.diameter();
        let mut params = RunParams {
            kind: spec.kind,
            delta: spec.delta,
            h,
            d,
            threshold: None,
            loss_budget: None,
            radius_bound: None,
        };
        match spec.kind {
            LearnerKind::SacsCpgc => {
                let c = match spec.threshold {
                    Some(c) => {
                        check_threshold(c, h, d, spec.delta)?;
                        c
                    }
                    None => default_threshold(h, d, spec.delta),
                };
                params.threshold = Some(c);
            }
            LearnerKind::OgdConstant => {
                let budget = match spec.loss_budget {
                    Some(l) => l,
                    None => ComparatorOracle::new(domain, losses)?.best(1, losses.len())?.loss,
                };
                params.loss_budget = Some(budget);
                params.radius_bound = Some(d / std::f64::consts::SQRT_2);
            }
            LearnerKind::Sogd | LearnerKind::Sacs => {}
        }
        Ok(params)
    }

    pub fn build(&self, domain: &Domain) -> Result<Box<dyn Learner>> {
        Ok(match self.kind {
            LearnerKind::Sogd => Box::new(Sogd::new(domain, self.delta, None)?),
            LearnerKind::OgdConstant => Box::new(OgdBaseline::new(ConstantStepOgd::new(
                domain,
                self.h,
                self.radius_bound.unwrap_or(self.d / std::f64::consts::SQRT_2),
                self.loss_budget.unwrap_or(0.0),
            )?)),
            LearnerKind::Sacs => Box::new(Sacs::new(domain, self.delta)?),
            LearnerKind::SacsCpgc => Box::new(SacsCpgc::new(domain, self.delta, self.h, self.threshold)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub loss: f64,
    pub cumulative_loss: f64,
    pub active_experts: usize,
    pub marker: bool,
    /// Empty when the trace was loaded without predictions.
    pub prediction: DecisionVector,
}

/// Per-round losses of one expert's own decisions, from its start round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpertStream {
    pub start: usize,
    pub losses: Vec<f64>,
}

impl ExpertStream {
    /// Last round the expert contributed to.
    pub fn last_round(&self) -> usize {
        self.start + self.losses.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub params: RunParams,
    pub rounds: Vec<RoundRecord>,
    pub experts: Vec<ExpertStream>,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn learner_losses(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.loss).collect()
    }

    /// Rounds flagged as markers, ascending.
    pub fn markers(&self) -> Vec<usize> {
        self.rounds.iter().filter(|r| r.marker).map(|r| r.round).collect()
    }

    /// Rebuild a trace from flat per-round and per-expert rows, checking
    /// that round numbers are consecutive and every expert stream is
    /// contiguous.
    pub fn from_rows(
        params: RunParams,
        rounds: Vec<RoundRecord>,
        expert_rows: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        for (k, r) in rounds.iter().enumerate() {
            if r.round != k + 1 {
                return Err(Error::contract(format!("row {} has round {}", k + 1, r.round)));
            }
        }
        let mut streams: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for (start, round, loss) in expert_rows {
            if round < start || round > rounds.len() {
                return Err(Error::contract(format!(
                    "expert {start} has a loss at round {round}"
                )));
            }
            streams.entry(start).or_default().push((round, loss));
        }
        let mut experts = Vec::with_capacity(streams.len());
        for (start, mut rows) in streams {
            rows.sort_by_key(|(round, _)| *round);
            for (k, (round, _)) in rows.iter().enumerate() {
                if *round != start + k {
                    return Err(Error::contract(format!("expert {start} skips round {}", start + k)));
                }
            }
            experts.push(ExpertStream {
                start,
                losses: rows.into_iter().map(|(_, l)| l).collect(),
            });
        }
        Ok(RunTrace {
            params,
            rounds,
            experts,
        })
    }
}

/// Play `losses` through `learner`, recording everything the audits need.
pub fn run_learner(learner: &mut dyn Learner, params: RunParams, losses: &[LossFunction]) -> Result<RunTrace> {
    let mut rounds = Vec::with_capacity(losses.len());
    let mut experts: Vec<ExpertStream> = Vec::new();
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0.0;
    for f in losses {
        let info = learner.play(f)?;
        total += info.loss;
        for e in &info.expert_losses {
            let k = *index.entry(e.start).or_insert_with(|| {
                experts.push(ExpertStream {
                    start: e.start,
                    losses: Vec::new(),
                });
                experts.len() - 1
            });
            experts[k].losses.push(e.loss);
        }
        rounds.push(RoundRecord {
            round: info.round,
            loss: info.loss,
            cumulative_loss: total,
            active_experts: info.active_experts,
            marker: info.marker,
            prediction: info.prediction,
        });
    }
    Ok(RunTrace {
        params,
        rounds,
        experts,
    })
}

/// Resolve constants, build the learner and run it.
pub fn run(spec: &LearnerSpec, domain: &Domain, losses: &[LossFunction]) -> Result<RunTrace> {
    let params = RunParams::resolve(spec, domain, losses)?;
    let mut learner = params.build(domain)?;
    run_learner(learner.as_mut(), params, losses)
}
