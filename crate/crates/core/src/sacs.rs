//! SACS: one SOGD expert per round on the CGC schedule, aggregated by
//! AdaNormalHedge.
//!
//! Round `t` runs, in order: create `E_t` for the CGC interval starting at
//! `t`; weight the active experts; play the weighted average; drop experts
//! whose interval ends at `t`; update `R`/`C` of the survivors; forward
//! `f_t` to the survivors.

use serde::Serialize;

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{Error, Result};
use crate::intervals::{cgc_cover, cgc_interval_at};
use crate::learner::{
    combine, double_predict, evaluate_experts, finish_round, update_without_predict, ExpertLoss,
    Learner, LearnerKind, RoundInfo,
};
use crate::meta::{ActiveSet, ExpertRecord, Removal};
use crate::sogd::{check_delta, Sogd};

#[derive(Debug, Clone)]
pub struct Sacs {
    domain: Domain,
    delta: f64,
    round: usize,
    active: ActiveSet,
    pending: Option<DecisionVector>,
}

impl Sacs {
    pub fn new(domain: &Domain, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Sacs {
            domain: domain.clone(),
            delta,
            round: 0,
            active: ActiveSet::new(),
            pending: None,
        })
    }

    /// Rounds started so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    /// Open round `t + 1` and return the decision `w_t`.
    pub fn predict(&mut self) -> Result<DecisionVector> {
        if self.pending.is_some() {
            return Err(double_predict());
        }
        self.round += 1;
        let t = self.round;
        let span = cgc_interval_at(t)?;
        let expert = Sogd::new(&self.domain, self.delta, None)?;
        self.active
            .push(ExpertRecord::new(t, Removal::EndRound(span.end), expert));
        let p = self.active.normalized_weights()?;
        let w = combine(&self.active, &p);
        self.pending = Some(w.clone());
        Ok(w)
    }

    /// Close the open round with the revealed loss.
    pub fn update(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        let w = self.pending.take().ok_or_else(update_without_predict)?;
        let t = self.round;
        let loss = f.value(&w)?;
        let evals = evaluate_experts(&self.active, f)?;
        let expert_losses: Vec<ExpertLoss> = self
            .active
            .records()
            .iter()
            .zip(&evals)
            .map(|(rec, (l, _))| ExpertLoss {
                start: rec.start,
                loss: *l,
            })
            .collect();
        let active_experts = self.active.len();

        let expired: Vec<bool> = self
            .active
            .records()
            .iter()
            .map(|rec| rec.removal == Removal::EndRound(t))
            .collect();
        let survivors = evals
            .into_iter()
            .zip(&expired)
            .filter(|(_, gone)| !**gone)
            .map(|(e, _)| e)
            .collect();
        self.active
            .remove_where(|rec| rec.removal == Removal::EndRound(t));
        let warnings = finish_round(&mut self.active, loss, survivors)?;

        Ok(RoundInfo {
            round: t,
            prediction: w,
            loss,
            active_experts,
            marker: false,
            expert_losses,
            warnings,
        })
    }
}

impl Learner for Sacs {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Sacs
    }

    fn play(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        self.predict()?;
        self.update(f)
    }
}

/// Constants of the SACS regret bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SacsBounds {
    pub h: f64,
    pub d: f64,
    pub delta: f64,
}

impl SacsBounds {
    pub fn new(h: f64, d: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(h >= 0.0 && d >= 0.0) {
            return Err(Error::invalid("h, d", "must be nonnegative"));
        }
        Ok(SacsBounds { h, d, delta })
    }

    fn log4t2(t: usize) -> f64 {
        let t = t as f64;
        (4.0 * t * t).ln()
    }

    /// `a(t) = 9/2·ln(4t²) + 18HD² + 2D√(2δ)`.
    pub fn a(&self, t: usize) -> f64 {
        4.5 * Self::log4t2(t) + 18.0 * self.h * self.d * self.d + 2.0 * self.d * (2.0 * self.delta).sqrt()
    }

    /// `b(t) = 24·ln(4t²) + 16HD²`.
    pub fn b(&self, t: usize) -> f64 {
        24.0 * Self::log4t2(t) + 16.0 * self.h * self.d * self.d
    }

    /// Regret over a CGC interval starting at `i`, measured up to `t`:
    /// `a(t) + √(b(t)·L)`.
    pub fn expert_bound(&self, t: usize, comparator_loss: f64) -> f64 {
        self.a(t) + (self.b(t) * comparator_loss).sqrt()
    }

    /// Cover length `v` used by [`interval_bound`](Self::interval_bound).
    pub fn cover_len(&self, r: usize, s: usize) -> Result<usize> {
        Ok(cgc_cover(r, s)?.len())
    }

    /// `v·a(s) + √(v·b(s)·L)` with `v` the greedy CGC cover length of `[r, s]`.
    pub fn interval_bound(&self, r: usize, s: usize, comparator_loss: f64) -> Result<f64> {
        if comparator_loss < 0.0 {
            return Err(Error::invalid("comparator_loss", "must be ≥ 0"));
        }
        let v = self.cover_len(r, s)? as f64;
        Ok(v * self.a(s) + (v * self.b(s) * comparator_loss).sqrt())
    }
}

/// Free-function form of [`SacsBounds::interval_bound`].
pub fn sacs_interval_bound(
    r: usize,
    s: usize,
    comparator_loss: f64,
    h: f64,
    d: f64,
    delta: f64,
) -> Result<f64> {
    SacsBounds::new(h, d, delta)?.interval_bound(r, s, comparator_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ShiftedQuadratic;
    use approx::assert_abs_diff_eq;

    fn setup() -> (Domain, Vec<LossFunction>) {
        let domain = Domain::unit_ball(2, 1.0).unwrap();
        let losses = (0..40)
            .map(|t| {
                let x = if t < 20 { 0.6 } else { -0.6 };
                ShiftedQuadratic::for_domain(vec![x, 0.1], &domain).unwrap().into()
            })
            .collect();
        (domain, losses)
    }

    #[test]
    fn first_rounds_follow_the_schedule() {
        let (domain, losses) = setup();
        let mut sacs = Sacs::new(&domain, 1.0).unwrap();

        let w1 = sacs.predict().unwrap();
        assert_eq!(sacs.active().len(), 1);
        assert_eq!(w1, domain.center());
        let info = sacs.update(&losses[0]).unwrap();
        assert_eq!(info.active_experts, 1);
        assert!(sacs.active().is_empty(), "E1 lives only on [1,1]");

        let w2 = sacs.predict().unwrap();
        assert_eq!(sacs.active().len(), 1);
        assert_eq!(sacs.active().records()[0].start, 2);
        assert_eq!(w2, domain.center());
        sacs.update(&losses[1]).unwrap();
        assert_eq!(sacs.active().len(), 1, "E2 lives on [2,3]");
        sacs.predict().unwrap();
        assert_eq!(sacs.active().len(), 2);
        sacs.update(&losses[2]).unwrap();
        assert!(sacs.active().is_empty());
    }

    #[test]
    fn active_set_size_is_logarithmic() {
        let (domain, losses) = setup();
        let mut sacs = Sacs::new(&domain, 1.0).unwrap();
        for (t, f) in losses.iter().enumerate() {
            let info = sacs.play(f).unwrap();
            let t = t + 1;
            assert!(info.active_experts <= (t.ilog2() + 1) as usize);
            if t == 16 {
                assert_eq!(info.active_experts, 1);
            }
            if t == 23 {
                assert_eq!(info.active_experts, 4);
            }
        }
    }

    #[test]
    fn prediction_is_a_convex_combination() {
        let (domain, losses) = setup();
        let mut sacs = Sacs::new(&domain, 1.0).unwrap();
        for f in &losses {
            let info = sacs.play(f).unwrap();
            assert!(domain.contains(&info.prediction, 1e-12));
            assert!((0.0..=1.0).contains(&info.loss));
        }
    }

    #[test]
    fn identical_experts_give_their_common_point() {
        let domain = Domain::unit_ball(2, 1.0).unwrap();
        let flat: LossFunction = ShiftedQuadratic::for_domain(vec![0.0, 0.0], &domain).unwrap().into();
        let mut sacs = Sacs::new(&domain, 1.0).unwrap();
        for _ in 0..10 {
            let info = sacs.play(&flat).unwrap();
            assert_eq!(info.prediction, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn protocol_misuse_is_rejected() {
        let (domain, losses) = setup();
        let mut sacs = Sacs::new(&domain, 1.0).unwrap();
        assert!(sacs.update(&losses[0]).is_err());
        sacs.predict().unwrap();
        assert!(sacs.predict().is_err());
        assert!(Sacs::new(&domain, 0.0).is_err());
    }

    #[test]
    fn bound_plug_ins() {
        let b = SacsBounds::new(0.25, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(b.interval_bound(7, 7, 0.0).unwrap(), b.a(7), epsilon = 1e-12);
        assert_abs_diff_eq!(b.a(23), 58.114_626_817_894_24, epsilon = 1e-9);
        assert_abs_diff_eq!(b.b(23), 199.774_787_031_476_56, epsilon = 1e-9);
        assert_abs_diff_eq!(b.interval_bound(5, 23, 10.0).unwrap(), 321.850_853_035_960_3, epsilon = 1e-8);

        let root = |l: f64| b.interval_bound(5, 23, l).unwrap() - 4.0 * b.a(23);
        assert_abs_diff_eq!(root(40.0), 2.0 * root(10.0), epsilon = 1e-9);
    }
}
