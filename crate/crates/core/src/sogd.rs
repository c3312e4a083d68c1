//! Scale-free online gradient descent and the constant-step OGD baseline.
//!
//! SOGD plays `w_t`, observes `f_t`, and moves to
//! `Π_W[w_t − η_t ∇f_t(w_t)]` with
//! `η_t = α / √(δ + Σ_{i ≤ t} ‖∇f_i(w_i)‖²)`. The current gradient is part
//! of the sum, and with `α = D/√2` the static regret against any `w ∈ W`
//! is at most `8HD² + D√(2δ + 8H Σ f_t(w))` at every horizon.

use serde::Serialize;

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{check_dim, Error, Result};
use crate::vector::{add_scaled, norm_sq};

pub const DEFAULT_DELTA: f64 = 1.0;

/// One SOGD instance.
#[derive(Debug, Clone)]
pub struct Sogd {
    domain: Domain,
    w: DecisionVector,
    grad_norm_sq_sum: f64,
    delta: f64,
    alpha: f64,
    rounds: usize,
    cumulative_loss: f64,
}

/// What a single round of SOGD produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SogdStep {
    /// The decision played this round (before the update).
    pub prediction: DecisionVector,
    pub loss: f64,
    pub eta: f64,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("must be > 0, got {delta}")))
    }
}

impl Sogd {
    /// `α = D/√2`; the first decision is `w1` projected onto the domain, or
    /// the domain center.
    pub fn new(domain: &Domain, delta: f64, w1: Option<&[f64]>) -> Result<Self> {
        check_delta(delta)?;
        let w = match w1 {
            Some(p) => domain.project(p)?,
            None => domain.center().to_vec(),
        };
        Ok(Sogd {
            domain: domain.clone(),
            w,
            grad_norm_sq_sum: 0.0,
            delta,
            alpha: domain.diameter() / std::f64::consts::SQRT_2,
            rounds: 0,
            cumulative_loss: 0.0,
        })
    }

    pub fn prediction(&self) -> &[f64] {
        &self.w
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grad_norm_sq_sum(&self) -> f64 {
        self.grad_norm_sq_sum
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative_loss
    }

    /// Step size given the gradients accumulated so far (`α/√δ` initially).
    pub fn step_size(&self) -> f64 {
        self.alpha / (self.delta + self.grad_norm_sq_sum).sqrt()
    }

    /// Play the current decision against `f` and update.
    pub fn step(&mut self, f: &LossFunction) -> Result<SogdStep> {
        let (loss, grad) = f.eval(&self.w)?;
        self.step_with(loss, &grad)
    }

    /// Update from a loss value and gradient already evaluated at
    /// [`prediction`](Self::prediction). Replaying a recorded stream through
    /// this method reproduces the iterates exactly.
    pub fn step_with(&mut self, loss: f64, grad: &[f64]) -> Result<SogdStep> {
        check_dim(self.w.len(), grad.len())?;
        self.grad_norm_sq_sum += norm_sq(grad);
        let eta = self.step_size();
        let next = self.domain.project_unchecked(&add_scaled(&self.w, -eta, grad));
        let prediction = std::mem::replace(&mut self.w, next);
        self.rounds += 1;
        self.cumulative_loss += loss;
        Ok(SogdStep {
            prediction,
            loss,
            eta,
        })
    }
}

/// Static regret bound of SOGD: `8HD² + D√(2δ + 8H·L)` for a comparator of
/// cumulative loss `L`.
pub fn sogd_bound(h: f64, d: f64, delta: f64, comparator_loss: f64) -> f64 {
    8.0 * h * d * d + d * (2.0 * delta + 8.0 * h * comparator_loss).sqrt()
}

/// Fixed step `1/(HB² + √(H²B⁴ + HB²L))`.
pub fn ogd_step_size(h: f64, b: f64, l: f64) -> f64 {
    let hb2 = h * b * b;
    1.0 / (hb2 + (hb2 * hb2 + hb2 * l).sqrt())
}

/// `4HB² + 2√(HB²L)`, valid for comparators with `‖w‖²/2 ≤ B²` and loss ≤ `L`.
pub fn ogd_bound(h: f64, b: f64, l: f64) -> f64 {
    let hb2 = h * b * b;
    4.0 * hb2 + 2.0 * (hb2 * l).sqrt()
}

/// Constant-step OGD started from the origin.
#[derive(Debug, Clone)]
pub struct ConstantStepOgd {
    domain: Domain,
    w: DecisionVector,
    eta: f64,
}

impl ConstantStepOgd {
    pub fn new(domain: &Domain, h: f64, b: f64, l: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::invalid("b", "must be a nonnegative number"));
        }
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::invalid("l", "must be a nonnegative number"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "must be positive"));
        }
        if !domain.contains_origin() {
            return Err(Error::contract("constant-step OGD starts at 0, which must lie in the domain"));
        }
        Ok(ConstantStepOgd {
            domain: domain.clone(),
            w: vec![0.0; domain.dim()],
            eta: ogd_step_size(h, b, l),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn prediction(&self) -> &[f64] {
        &self.w
    }

    pub fn step(&mut self, f: &LossFunction) -> Result<SogdStep> {
        let (loss, grad) = f.eval(&self.w)?;
        let next = self.domain.project_unchecked(&add_scaled(&self.w, -self.eta, &grad));
        let prediction = std::mem::replace(&mut self.w, next);
        Ok(SogdStep {
            prediction,
            loss,
            eta: self.eta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OgdTrace {
    pub eta: f64,
    pub predictions: Vec<DecisionVector>,
    pub losses: Vec<f64>,
    /// Regret bound `4HB² + 2√(HB²L)` for the chosen `B`, `L`.
    pub bound: f64,
}

/// Run constant-step OGD over `losses`.
pub fn ogd_constant_step(
    domain: &Domain,
    h: f64,
    b: f64,
    l: f64,
    losses: &[LossFunction],
) -> Result<OgdTrace> {
    let mut ogd = ConstantStepOgd::new(domain, h, b, l)?;
    let mut predictions = Vec::with_capacity(losses.len());
    let mut values = Vec::with_capacity(losses.len());
    for f in losses {
        let step = ogd.step(f)?;
        predictions.push(step.prediction);
        values.push(step.loss);
    }
    Ok(OgdTrace {
        eta: ogd.eta,
        predictions,
        losses: values,
        bound: ogd_bound(h, b, l),
    })
}
