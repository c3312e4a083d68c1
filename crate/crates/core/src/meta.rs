//! AdaNormalHedge over sleeping experts.
//!
//! Each expert carries `R` (signed regret of the learner against it) and
//! `C` (sum of absolute instantaneous regrets). Weights come from the
//! potential `Φ(R, C) = exp([R]₊² / (3C))`, `Φ(0, 0) = 1`, through
//! `w(R, C) = ½(Φ(R+1, C+1) − Φ(R−1, C+1))`. Exponents grow like `t/3`, so
//! everything below is evaluated in the log domain.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sogd::Sogd;

/// `Φ(R, C) = exp([R]₊² / (3C))` with `Φ(0, 0) = 1`.
pub fn potential(r: f64, c: f64) -> Result<f64> {
    log_potential(r, c).map(f64::exp)
}

/// `ln Φ(R, C)`.
pub fn log_potential(r: f64, c: f64) -> Result<f64> {
    if c < 0.0 || c.is_nan() {
        return Err(Error::invalid("c", format!("must be ≥ 0, got {c}")));
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    if c == 0.0 {
        return Err(Error::contract("potential undefined for R > 0 with C = 0"));
    }
    Ok(r * r / (3.0 * c))
}

/// `ln w(R, C)`; `-∞` exactly when `R ≤ −1`.
pub fn log_weight(r: f64, c: f64) -> Result<f64> {
    if c < 0.0 || c.is_nan() {
        return Err(Error::invalid("c", format!("must be ≥ 0, got {c}")));
    }
    let hi = log_potential(r + 1.0, c + 1.0)?;
    let lo = log_potential(r - 1.0, c + 1.0)?;
    // ½·e^hi·(1 − e^(lo−hi)) with hi ≥ lo.
    let gap = lo - hi;
    if gap == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(hi + (-gap.exp_m1()).ln() - std::f64::consts::LN_2)
}

/// `w(R, C) = ½(Φ(R+1, C+1) − Φ(R−1, C+1))`; overflows to `∞` for huge
/// exponents, use [`log_weight`] there.
pub fn weight(r: f64, c: f64) -> Result<f64> {
    log_weight(r, c).map(f64::exp)
}

/// When an expert retires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Removal {
    /// Last round of its interval.
    EndRound(usize),
    /// Marker index whose creation ends the interval.
    EndIndex(usize),
}

/// One sleeping expert with its AdaNormalHedge statistics.
#[derive(Debug, Clone)]
pub struct ExpertRecord {
    pub start: usize,
    pub removal: Removal,
    regret: f64,
    abs_regret: f64,
    pub expert: Sogd,
}

impl ExpertRecord {
    pub fn new(start: usize, removal: Removal, expert: Sogd) -> Self {
        ExpertRecord {
            start,
            removal,
            regret: 0.0,
            abs_regret: 0.0,
            expert,
        }
    }

    /// `R`: cumulative learner loss minus this expert's loss.
    pub fn regret(&self) -> f64 {
        self.regret
    }

    /// `C`: cumulative absolute instantaneous regret.
    pub fn abs_regret(&self) -> f64 {
        self.abs_regret
    }

    pub fn log_weight(&self) -> f64 {
        // C ≥ 0 by construction.
        log_weight(self.regret, self.abs_regret).expect("abs regret is nonnegative")
    }

    /// Apply instantaneous regret `learner_loss − expert_loss`; returns it.
    pub fn record(&mut self, learner_loss: f64, expert_loss: f64) -> f64 {
        let r = learner_loss - expert_loss;
        self.regret += r;
        self.abs_regret += r.abs();
        r
    }
}

/// A loss outside `[0, 1]`: the meta-regret guarantee no longer applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeWarning {
    /// `None` for the learner's own loss.
    pub expert_start: Option<usize>,
    pub value: f64,
}

fn out_of_range(x: f64) -> bool {
    !(0.0..=1.0).contains(&x)
}

/// Active experts, ordered by start round.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    records: Vec<ExpertRecord>,
}

impl ActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ExpertRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [ExpertRecord] {
        &mut self.records
    }

    pub fn push(&mut self, record: ExpertRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.start < record.start));
        self.records.push(record);
    }

    /// Drop experts matching `pred`; returns how many were removed.
    pub fn remove_where(&mut self, mut pred: impl FnMut(&ExpertRecord) -> bool) -> usize {
        let before = self.records.len();
        self.records.retain(|r| !pred(r));
        before - self.records.len()
    }

    /// `p_{t,i} ∝ w(R_i, C_i)`.
    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        normalized_from_log(&self.records.iter().map(|r| r.log_weight()).collect::<Vec<_>>())
    }

    /// Apply one round of statistics: `expert_losses[k]` belongs to the
    /// `k`-th record.
    pub fn update_records(
        &mut self,
        learner_loss: f64,
        expert_losses: &[f64],
    ) -> Result<Vec<RangeWarning>> {
        if expert_losses.len() != self.records.len() {
            return Err(Error::DimensionMismatch {
                expected: self.records.len(),
                got: expert_losses.len(),
            });
        }
        let mut warnings = Vec::new();
        if out_of_range(learner_loss) {
            warnings.push(RangeWarning {
                expert_start: None,
                value: learner_loss,
            });
        }
        for (rec, &loss) in self.records.iter_mut().zip(expert_losses) {
            if out_of_range(loss) {
                warnings.push(RangeWarning {
                    expert_start: Some(rec.start),
                    value: loss,
                });
            }
            rec.record(learner_loss, loss);
        }
        Ok(warnings)
    }
}

/// Normalize log-weights after factoring out the maximum. If every weight
/// is zero the distribution falls back to uniform.
pub fn normalized_from_log(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.is_empty() {
        return Err(Error::contract("no active experts to weight"));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let p = 1.0 / log_weights.len() as f64;
        return Ok(vec![p; log_weights.len()]);
    }
    let scaled: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = scaled.iter().sum();
    Ok(scaled.into_iter().map(|x| x / total).collect())
}

/// `c(t) = 3 ln(4t²)`.
pub fn c_of_t(t: usize) -> f64 {
    let t = t as f64;
    3.0 * (4.0 * t * t).ln()
}

/// Meta-regret bound against one expert: `c(t) + √(2c(t)·L_expert)`.
pub fn meta_regret_bound(t: usize, expert_cumulative_loss: f64) -> f64 {
    let c = c_of_t(t);
    c + (2.0 * c * expert_cumulative_loss).sqrt()
}
