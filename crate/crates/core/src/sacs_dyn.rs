//! SACS on problem-dependent (CPGC) intervals.
//!
//! Experts are only opened at markers. A marker is placed the round after
//! the latest expert's cumulative loss first exceeds the threshold `C`.
//! The expert opened at marker index `m = i·2^k` (`i` odd) covers
//! `[s_m, s_{m+2^k} − 1]`; since that end round is unknown when the expert
//! is created, it records the end index `g = m + 2^k` and retires in the
//! round the threshold trips with `g = m + 1`.

use serde::Serialize;

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{Error, Result};
use crate::intervals::{cgc_end_index, marker_cover};
use crate::learner::{
    combine, double_predict, evaluate_experts, finish_round, update_without_predict, ExpertLoss,
    Learner, LearnerKind, RoundInfo,
};
use crate::meta::{ActiveSet, ExpertRecord, Removal};
use crate::sogd::{check_delta, Sogd};

/// Smallest admissible threshold: `20HD² + 2D√(2δ)`.
pub fn threshold_floor(h: f64, d: f64, delta: f64) -> f64 {
    20.0 * h * d * d + 2.0 * d * (2.0 * delta).sqrt()
}

/// Default threshold: the floor, but at least 1.
pub fn default_threshold(h: f64, d: f64, delta: f64) -> f64 {
    threshold_floor(h, d, delta).max(1.0)
}

pub(crate) fn check_threshold(threshold: f64, h: f64, d: f64, delta: f64) -> Result<()> {
    let floor = threshold_floor(h, d, delta);
    if threshold.is_finite() && threshold >= floor {
        Ok(())
    } else {
        Err(Error::invalid(
            "threshold",
            format!("C = {threshold} is below the admissible floor 20HD² + 2D√(2δ) = {floor}"),
        ))
    }
}

/// Marker bookkeeping of the problem-dependent schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerState {
    pub new_interval: bool,
    /// Markers created so far (`m`).
    pub count: usize,
    /// Start round of the latest expert (`n`).
    pub latest: usize,
    /// Cumulative loss of the latest expert since its marker.
    pub latest_loss: f64,
    pub threshold: f64,
    /// Marker rounds `s_1 < s_2 < …`.
    pub rounds: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SacsCpgc {
    domain: Domain,
    delta: f64,
    round: usize,
    active: ActiveSet,
    markers: MarkerState,
    pending: Option<(DecisionVector, bool)>,
}

impl SacsCpgc {
    /// `threshold = None` picks [`default_threshold`]; an explicit value is
    /// validated against [`threshold_floor`]. `h` is the smoothness of the
    /// losses that will be played.
    pub fn new(domain: &Domain, delta: f64, h: f64, threshold: Option<f64>) -> Result<Self> {
        check_delta(delta)?;
        let d = domain.diameter();
        let threshold = match threshold {
            Some(c) => {
                check_threshold(c, h, d, delta)?;
                c
            }
            None => default_threshold(h, d, delta),
        };
        Ok(SacsCpgc {
            domain: domain.clone(),
            delta,
            round: 0,
            active: ActiveSet::new(),
            markers: MarkerState {
                new_interval: true,
                count: 0,
                latest: 0,
                latest_loss: 0.0,
                threshold,
                rounds: Vec::new(),
            },
            pending: None,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn markers(&self) -> &MarkerState {
        &self.markers
    }

    pub fn threshold(&self) -> f64 {
        self.markers.threshold
    }

    pub fn predict(&mut self) -> Result<DecisionVector> {
        if self.pending.is_some() {
            return Err(double_predict());
        }
        self.round += 1;
        let t = self.round;
        let opened = self.markers.new_interval;
        if opened {
            let expert = Sogd::new(&self.domain, self.delta, None)?;
            self.markers.new_interval = false;
            self.markers.count += 1;
            let g = cgc_end_index(self.markers.count)?;
            self.active
                .push(ExpertRecord::new(t, Removal::EndIndex(g), expert));
            self.markers.latest = t;
            self.markers.latest_loss = 0.0;
            self.markers.rounds.push(t);
        }
        let p = self.active.normalized_weights()?;
        let w = combine(&self.active, &p);
        self.pending = Some((w.clone(), opened));
        Ok(w)
    }

    pub fn update(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        let (w, marker) = self.pending.take().ok_or_else(update_without_predict)?;
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

        let latest = self.markers.latest;
        let latest_loss = expert_losses
            .iter()
            .find(|e| e.start == latest)
            .map(|e| e.loss)
            .ok_or_else(|| Error::contract(format!("latest expert E_{latest} is not active")))?;
        self.markers.latest_loss += latest_loss;

        let mut expired = vec![false; evals.len()];
        if self.markers.latest_loss > self.markers.threshold {
            self.markers.new_interval = true;
            let closing = Removal::EndIndex(self.markers.count + 1);
            for (gone, rec) in expired.iter_mut().zip(self.active.records()) {
                *gone = rec.removal == closing;
            }
            self.active.remove_where(|rec| rec.removal == closing);
        }
        // Every surviving expert must still be waiting for a future marker.
        debug_assert!(self.active.records().iter().all(|rec| matches!(
            rec.removal,
            Removal::EndIndex(g) if g > self.markers.count
        )));

        let survivors = evals
            .into_iter()
            .zip(&expired)
            .filter(|(_, gone)| !**gone)
            .map(|(e, _)| e)
            .collect();
        let warnings = finish_round(&mut self.active, loss, survivors)?;

        Ok(RoundInfo {
            round: t,
            prediction: w,
            loss,
            active_experts,
            marker,
            expert_losses,
            warnings,
        })
    }
}

impl Learner for SacsCpgc {
    fn kind(&self) -> LearnerKind {
        LearnerKind::SacsCpgc
    }

    fn play(&mut self, f: &LossFunction) -> Result<RoundInfo> {
        self.predict()?;
        self.update(f)
    }
}

/// Upper bound on the meta-level constant:
/// `3 ln(1 + 4/C·L₁ᵗ) + 3 ln((5 + 3 ln(1 + t))/2)`.
pub fn c_tilde(t: usize, cumulative_comparator_loss: f64, threshold: f64) -> f64 {
    let t = t as f64;
    3.0 * (1.0 + 4.0 / threshold * cumulative_comparator_loss).ln()
        + 3.0 * ((5.0 + 3.0 * (1.0 + t).ln()) / 2.0).ln()
}

/// `⌊1 + 4L/C⌋`: most markers that can exist given a comparator with
/// prefix loss `L`.
pub fn marker_count_bound(threshold: f64, prefix_comparator_loss: f64) -> usize {
    (1.0 + 4.0 * prefix_comparator_loss / threshold).floor() as usize
}

/// Bound constants of the problem-dependent learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpgcBounds {
    pub h: f64,
    pub d: f64,
    pub delta: f64,
    pub threshold: f64,
}

/// The marker-count `v` and terms entering the interval bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalTerms {
    pub v: usize,
    pub c_tilde: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
}

impl CpgcBounds {
    pub fn new(h: f64, d: f64, delta: f64, threshold: f64) -> Result<Self> {
        check_delta(delta)?;
        check_threshold(threshold, h, d, delta)?;
        Ok(CpgcBounds {
            h,
            d,
            delta,
            threshold,
        })
    }

    pub fn c_tilde(&self, t: usize, prefix_loss: f64) -> f64 {
        c_tilde(t, prefix_loss, self.threshold)
    }

    /// `ã = 3/2·c̃ + 18HD² + 2D√(2δ)`.
    pub fn a_tilde(&self, c_tilde: f64) -> f64 {
        1.5 * c_tilde + 18.0 * self.h * self.d * self.d + 2.0 * self.d * (2.0 * self.delta).sqrt()
    }

    /// `b̃ = 8c̃ + 16HD²`.
    pub fn b_tilde(&self, c_tilde: f64) -> f64 {
        8.0 * c_tilde + 16.0 * self.h * self.d * self.d
    }

    /// `⌈log₂(2 + 4/C·L_rs)⌉`.
    pub fn cover_len_ceiling(&self, interval_loss: f64) -> usize {
        (2.0 + 4.0 / self.threshold * interval_loss).log2().ceil() as usize
    }

    /// Length of the marker cover of `[s_p, s]` where `s_p` is the first
    /// marker after `r` and `s_q` the last marker at or before `s`; zero
    /// when no marker falls in `(r, s]`.
    pub fn constructive_cover_len(markers: &[usize], r: usize, s: usize) -> Result<usize> {
        // Marker indices are 1-based.
        let p = markers.partition_point(|&m| m <= r) + 1;
        let q = markers.partition_point(|&m| m <= s);
        if p > q {
            return Ok(0);
        }
        Ok(marker_cover(p, q)?.len())
    }

    pub fn interval_terms(
        &self,
        r: usize,
        s: usize,
        interval_loss: f64,
        prefix_loss: f64,
        markers: Option<&[usize]>,
    ) -> Result<IntervalTerms> {
        if r < 1 || r > s {
            return Err(Error::contract(format!("invalid interval [{r}, {s}]")));
        }
        let ceiling = self.cover_len_ceiling(interval_loss);
        let v = match markers {
            Some(ms) => ceiling.min(Self::constructive_cover_len(ms, r, s)?),
            None => ceiling,
        };
        let c = self.c_tilde(s, prefix_loss);
        Ok(IntervalTerms {
            v,
            c_tilde: c,
            a_tilde: self.a_tilde(c),
            b_tilde: self.b_tilde(c),
        })
    }

    /// `2(C+1) + 3/2·c̃(s) + v·ã(s) + √(v·b̃(s)·L_rs)`.
    pub fn interval_bound(
        &self,
        r: usize,
        s: usize,
        interval_loss: f64,
        prefix_loss: f64,
        markers: Option<&[usize]>,
    ) -> Result<f64> {
        let terms = self.interval_terms(r, s, interval_loss, prefix_loss, markers)?;
        let v = terms.v as f64;
        Ok(2.0 * (self.threshold + 1.0)
            + 1.5 * terms.c_tilde
            + v * terms.a_tilde
            + (v * terms.b_tilde * interval_loss).sqrt())
    }

    /// Meta-regret bound against an expert up to round `t`:
    /// `c̃ + √(2c̃·L_expert)`.
    pub fn expert_bound(&self, t: usize, prefix_loss: f64, expert_loss: f64) -> f64 {
        let c = self.c_tilde(t, prefix_loss);
        c + (2.0 * c * expert_loss).sqrt()
    }
}

/// Free-function form of [`CpgcBounds::interval_bound`] without marker data.
#[allow(clippy::too_many_arguments)]
pub fn cpgc_interval_bound(
    r: usize,
    s: usize,
    interval_loss: f64,
    prefix_loss: f64,
    h: f64,
    d: f64,
    delta: f64,
    threshold: f64,
) -> Result<f64> {
    CpgcBounds::new(h, d, delta, threshold)?.interval_bound(r, s, interval_loss, prefix_loss, None)
}
