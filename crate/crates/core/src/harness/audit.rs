use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{Error, Result};
use crate::harness::oracle::{grid_comparator, Comparator, ComparatorOracle};
use crate::harness::run::{ExpertStream, RunParams, RunTrace};
use crate::learner::LearnerKind;
use crate::meta::meta_regret_bound;
use crate::sacs::SacsBounds;
use crate::sacs_dyn::{c_tilde, marker_count_bound, CpgcBounds};
use crate::sogd::{ogd_bound, sogd_bound};

/// A margin counts as a violation only below this.
pub const MARGIN_SLACK: f64 = -1e-6;

/// Which intervals `[r, s]` get a full regret report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntervalFamily {
    /// Every `[i·2^k, (i+1)·2^k − 1]` inside the horizon, plus the stages.
    Dyadic,
    /// Dyadic, stages, and `n` uniformly random intervals.
    Sampled { n: usize },
    /// Every interval; only for horizons up to [`EXHAUSTIVE_MAX`].
    Exhaustive,
}

pub const EXHAUSTIVE_MAX: usize = 256;

impl Default for IntervalFamily {
    fn default() -> Self {
        IntervalFamily::Sampled { n: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditOptions {
    pub family: IntervalFamily,
    pub seed: u64,
    /// Multiplier on the additive term (`8HD²`, `4HB²`, `a(t)`, `ã(t)`) of
    /// each interval bound. Anything below 1 is a deliberately wrong bound.
    pub a_scale: f64,
    /// Random comparators tested per reported interval besides the minimizer.
    pub extra_comparators: usize,
    /// Reported intervals whose comparator is re-derived by grid search
    /// (dimension ≤ 2 only).
    pub cross_checks: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            family: IntervalFamily::default(),
            seed: 0,
            a_scale: 1.0,
            extra_comparators: 2,
            cross_checks: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub bound_name: &'static str,
    pub r: usize,
    pub s: usize,
    pub comparator: DecisionVector,
    pub comparator_loss: f64,
    pub learner_loss: f64,
    pub regret: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    /// The bound does not apply (solver did not converge, or the comparator
    /// is outside the bound's hypotheses); never counted as a violation.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    pub excluded: usize,
    pub worst_margin: Option<f64>,
    pub worst_at: Option<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeViolation {
    pub round: usize,
    /// `None` for the learner's own loss.
    pub expert_start: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub learner: LearnerKind,
    pub horizon: usize,
    pub a_scale: f64,
    pub passed: bool,
    pub violations: usize,
    pub checks: Vec<CheckSummary>,
    pub range_violations: Vec<RangeViolation>,
    /// Sorted by margin, smallest first.
    pub reports: Vec<RegretReport>,
}

impl AuditReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn report(&self, r: usize, s: usize) -> Option<&RegretReport> {
        self.reports.iter().find(|rep| rep.r == r && rep.s == s)
    }
}

struct Tally {
    name: &'static str,
    checks: usize,
    violations: usize,
    excluded: usize,
    worst: Option<(f64, String)>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            checks: 0,
            violations: 0,
            excluded: 0,
            worst: None,
        }
    }

    fn add(&mut self, margin: f64, at: impl FnOnce() -> String) {
        self.checks += 1;
        // NaN counts as a violation.
        if margin.is_nan() || margin < MARGIN_SLACK {
            self.violations += 1;
        }
        let worse = match &self.worst {
            None => true,
            Some((m, _)) => margin < *m || margin.is_nan(),
        };
        if worse {
            self.worst = Some((margin, at()));
        }
    }

    fn exclude(&mut self) {
        self.excluded += 1;
    }

    fn finish(self) -> CheckSummary {
        let (worst_margin, worst_at) = match self.worst {
            Some((m, at)) => (Some(m), Some(at)),
            None => (None, None),
        };
        CheckSummary {
            name: self.name,
            checks: self.checks,
            violations: self.violations,
            excluded: self.excluded,
            worst_margin,
            worst_at,
        }
    }
}

/// `[i·2^k, (i+1)·2^k − 1]` for all `k`, `i ≥ 1` with the end inside the
/// horizon.
pub fn dyadic_intervals(horizon: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut width = 1;
    while width <= horizon {
        let mut start = width;
        while start + width - 1 <= horizon {
            out.push((start, start + width - 1));
            start += width;
        }
        width *= 2;
    }
    out
}

/// `n` intervals with endpoints drawn uniformly from `1..=horizon`.
pub fn sampled_intervals(horizon: usize, n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    (0..n)
        .map(|_| {
            let a = rng.random_range(1..=horizon);
            let b = rng.random_range(1..=horizon);
            (a.min(b), a.max(b))
        })
        .collect()
}

/// The reported intervals, sorted and without duplicates.
pub fn interval_family(
    family: IntervalFamily,
    horizon: usize,
    stages: &[(usize, usize)],
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    match family {
        IntervalFamily::Exhaustive => {
            if horizon > EXHAUSTIVE_MAX {
                return Err(Error::invalid(
                    "family",
                    format!("exhaustive audits need a horizon ≤ {EXHAUSTIVE_MAX}, got {horizon}"),
                ));
            }
            for r in 1..=horizon {
                set.extend((r..=horizon).map(|s| (r, s)));
            }
        }
        IntervalFamily::Dyadic | IntervalFamily::Sampled { .. } => {
            set.extend(dyadic_intervals(horizon));
            if let IntervalFamily::Sampled { n } = family {
                set.extend(sampled_intervals(horizon, n, seed));
            }
        }
    }
    for &(r, s) in stages {
        if r < 1 || r > s || s > horizon {
            return Err(Error::contract(format!("stage [{r}, {s}] outside the horizon {horizon}")));
        }
        set.insert((r, s));
    }
    Ok(set.into_iter().collect())
}

/// `Σ_{t=r}^s f_t(w_t) − L` from the learner's recorded losses.
pub fn interval_regret(trace: &RunTrace, r: usize, s: usize, comparator_loss: f64) -> Result<f64> {
    if r < 1 || r > s || s > trace.horizon() {
        return Err(Error::contract(format!("interval [{r}, {s}] outside the trace")));
    }
    let learner: f64 = trace.rounds[r - 1..s].iter().map(|rec| rec.loss).sum();
    Ok(learner - comparator_loss)
}

fn prefix_sums(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

/// The interval bound a learner is audited against.
enum Model {
    Sogd { h: f64, d: f64, delta: f64 },
    Ogd { h: f64, b: f64, budget: f64 },
    Sacs(SacsBounds),
    Cpgc { bounds: CpgcBounds, markers: Vec<usize> },
}

impl Model {
    fn new(params: &RunParams, markers: Vec<usize>) -> Result<Self> {
        let RunParams { h, d, delta, .. } = *params;
        Ok(match params.kind {
            LearnerKind::Sogd => Model::Sogd { h, d, delta },
            LearnerKind::OgdConstant => Model::Ogd {
                h,
                b: params
                    .radius_bound
                    .ok_or_else(|| Error::contract("constant-step run without B"))?,
                budget: params
                    .loss_budget
                    .ok_or_else(|| Error::contract("constant-step run without a loss budget"))?,
            },
            LearnerKind::Sacs => Model::Sacs(SacsBounds::new(h, d, delta)?),
            LearnerKind::SacsCpgc => Model::Cpgc {
                bounds: CpgcBounds::new(
                    h,
                    d,
                    delta,
                    params
                        .threshold
                        .ok_or_else(|| Error::contract("marker run without a threshold"))?,
                )?,
                markers,
            },
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Model::Sogd { .. } => "sogd-static",
            Model::Ogd { .. } => "ogd-static",
            Model::Sacs(_) => "sacs-interval",
            Model::Cpgc { .. } => "cpgc-interval",
        }
    }

    /// Static-regret learners are only audited on prefixes.
    fn prefix_only(&self) -> bool {
        matches!(self, Model::Sogd { .. } | Model::Ogd { .. })
    }

    /// Bound for comparator `w` with interval loss `l_rs`; `None` when the
    /// hypotheses on `w` fail. `best_prefix(s)` is an upper bound on
    /// `min_w Σ_{t≤s} f_t(w)`.
    fn bound(&self, r: usize, s: usize, w: &[f64], l_rs: f64, best_prefix: f64, kappa: f64) -> Result<Option<f64>> {
        Ok(match self {
            Model::Sogd { h, d, delta } => {
                Some(sogd_bound(*h, *d, *delta, l_rs) - (1.0 - kappa) * 8.0 * h * d * d)
            }
            Model::Ogd { h, b, budget } => {
                let fits = crate::vector::norm_sq(w) / 2.0 <= b * b * (1.0 + 1e-12) && l_rs <= *budget * (1.0 + 1e-12) + 1e-12;
                fits.then(|| ogd_bound(*h, *b, *budget) - (1.0 - kappa) * 4.0 * h * b * b)
            }
            Model::Sacs(b) => {
                let v = b.cover_len(r, s)? as f64;
                Some(v * kappa * b.a(s) + (v * b.b(s) * l_rs).sqrt())
            }
            Model::Cpgc { bounds, markers } => {
                let t = bounds.interval_terms(r, s, l_rs, best_prefix, Some(markers))?;
                let v = t.v as f64;
                Some(
                    2.0 * (bounds.threshold + 1.0)
                        + 1.5 * t.c_tilde
                        + v * kappa * t.a_tilde
                        + (v * t.b_tilde * l_rs).sqrt(),
                )
            }
        })
    }
}

struct Context<'a> {
    trace: &'a RunTrace,
    oracle: ComparatorOracle<'a>,
    learner_prefix: Vec<f64>,
    /// Upper bound on `min_w Σ_{u≤t} f_u(w)`, indexed by `t`.
    best_prefix: Vec<f64>,
    model: Model,
    options: &'a AuditOptions,
}

impl Context<'_> {
    fn learner_loss(&self, r: usize, s: usize) -> f64 {
        self.learner_prefix[s] - self.learner_prefix[r - 1]
    }

    fn report(&self, r: usize, s: usize, c: &Comparator) -> Result<RegretReport> {
        let learner_loss = self.learner_loss(r, s);
        let regret = learner_loss - c.loss;
        let bound = self.model.bound(r, s, &c.point, c.loss, self.best_prefix[s], self.options.a_scale)?;
        let excluded = !c.converged || bound.is_none();
        let bound = bound.unwrap_or(f64::INFINITY);
        let margin = bound - regret;
        Ok(RegretReport {
            bound_name: self.model.name(),
            r,
            s,
            comparator: c.point.clone(),
            comparator_loss: c.loss,
            learner_loss,
            regret,
            bound,
            margin,
            passed: excluded || margin >= MARGIN_SLACK,
            excluded,
        })
    }

    /// Random comparators for `[r, s]`: `(margin, excluded)` per point.
    fn extra(&self, r: usize, s: usize) -> Result<Vec<(f64, bool)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
        rng.set_stream(((r as u64) << 32) | s as u64);
        let domain = self.oracle.domain();
        (0..self.options.extra_comparators)
            .map(|_| {
                let w = domain.sample(&mut rng);
                let l = self.oracle.loss_unchecked(&w, r, s);
                let regret = self.learner_loss(r, s) - l;
                let bound = self.model.bound(r, s, &w, l, self.best_prefix[s], self.options.a_scale)?;
                Ok(match bound {
                    Some(b) => (b - regret, false),
                    None => (f64::INFINITY, true),
                })
            })
            .collect()
    }
}

fn range_violations(trace: &RunTrace) -> Vec<RangeViolation> {
    let bad = |x: f64| !(0.0..=1.0).contains(&x);
    let mut out: Vec<RangeViolation> = trace
        .rounds
        .iter()
        .filter(|rec| bad(rec.loss))
        .map(|rec| RangeViolation {
            round: rec.round,
            expert_start: None,
            value: rec.loss,
        })
        .collect();
    for e in &trace.experts {
        for (k, &l) in e.losses.iter().enumerate() {
            if bad(l) {
                out.push(RangeViolation {
                    round: e.start + k,
                    expert_start: Some(e.start),
                    value: l,
                });
            }
        }
    }
    out.sort_by_key(|v| (v.round, v.expert_start));
    out
}

/// Cumulative meta-regret of the learner against each expert, checked at
/// every round of the expert's life against `bound(t, expert_loss)`.
fn meta_audit(
    name: &'static str,
    learner_losses: &[f64],
    experts: &[ExpertStream],
    bound: impl Fn(usize, f64) -> f64 + Sync,
) -> CheckSummary {
    let per_expert: Vec<Vec<(f64, usize, usize)>> = experts
        .par_iter()
        .map(|e| {
            let mut regret = 0.0;
            let mut own = 0.0;
            e.losses
                .iter()
                .enumerate()
                .map(|(k, &l)| {
                    let t = e.start + k;
                    regret += learner_losses[t - 1] - l;
                    own += l;
                    (bound(t, own) - regret, e.start, t)
                })
                .collect()
        })
        .collect();
    let mut tally = Tally::new(name);
    for (margin, i, t) in per_expert.into_iter().flatten() {
        tally.add(margin, || format!("expert {i} at round {t}"));
    }
    tally.finish()
}

/// Regret from each expert's start through every round of its life,
/// against `bound(t, comparator_loss)`.
fn interval_life_audit(
    name: &'static str,
    ctx: &Context<'_>,
    bound: impl Fn(usize, f64) -> f64 + Sync,
) -> Result<CheckSummary> {
    let closed = ctx.oracle.is_closed_form();
    let pairs: Vec<(usize, usize)> = ctx
        .trace
        .experts
        .iter()
        .flat_map(|e| {
            let first = if closed { e.start } else { e.last_round() };
            (first..=e.last_round()).map(move |t| (e.start, t))
        })
        .collect();
    let results: Vec<Result<(f64, bool, usize, usize)>> = pairs
        .par_iter()
        .map(|&(i, t)| {
            let c = ctx.oracle.best(i, t)?;
            let regret = ctx.learner_loss(i, t) - c.loss;
            Ok((bound(t, c.loss) - regret, c.converged, i, t))
        })
        .collect();
    let mut tally = Tally::new(name);
    for res in results {
        let (margin, converged, i, t) = res?;
        if converged {
            tally.add(margin, || format!("[{i}, {t}]"));
        } else {
            tally.exclude();
        }
    }
    Ok(tally.finish())
}

/// Audit a finished run against every bound that applies to its learner.
///
/// Interval reports use the hindsight minimizer of each interval in the
/// family; static-regret learners are reported on the prefixes `[1, s]` of
/// the family instead. `stages` are added to the family as-is.
pub fn audit_run(
    trace: &RunTrace,
    domain: &Domain,
    losses: &[LossFunction],
    stages: &[(usize, usize)],
    options: &AuditOptions,
) -> Result<AuditReport> {
    let horizon = trace.horizon();
    if horizon != losses.len() {
        return Err(Error::contract(format!(
            "trace has {horizon} rounds but the scenario has {}",
            losses.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::contract("empty trace"));
    }
    if !(options.a_scale >= 0.0 && options.a_scale.is_finite()) {
        return Err(Error::invalid("a_scale", "must be a nonnegative number"));
    }
    for e in &trace.experts {
        if e.losses.is_empty() || e.start < 1 || e.last_round() > horizon {
            return Err(Error::contract(format!("expert stream {} outside the trace", e.start)));
        }
    }

    let oracle = ComparatorOracle::new(domain, losses)?;
    let learner_losses = trace.learner_losses();
    let learner_prefix = prefix_sums(learner_losses.iter().copied());

    // Exact prefix minima in closed form; otherwise the prefix losses of the
    // whole-run minimizer, which bound them from above.
    let whole = oracle.best(1, horizon)?;
    let best_prefix = if oracle.is_closed_form() {
        let mut v = vec![0.0];
        for t in 1..=horizon {
            v.push(oracle.best(1, t)?.loss);
        }
        v
    } else {
        prefix_sums(losses.iter().map(|f| f.value_unchecked(&whole.point)))
    };

    let model = Model::new(&trace.params, trace.markers())?;
    let ctx = Context {
        trace,
        oracle,
        learner_prefix,
        best_prefix,
        model,
        options,
    };

    let mut intervals = interval_family(options.family, horizon, stages, options.seed)?;
    if ctx.model.prefix_only() {
        let ends: BTreeSet<usize> = intervals.iter().map(|&(_, s)| s).collect();
        intervals = ends.into_iter().map(|s| (1, s)).collect();
    }

    type Computed = Result<(RegretReport, Vec<(f64, bool)>)>;
    let computed: Vec<Computed> = intervals
        .par_iter()
        .map(|&(r, s)| {
            let c = ctx.oracle.best(r, s)?;
            Ok((ctx.report(r, s, &c)?, ctx.extra(r, s)?))
        })
        .collect();
    let mut reports = Vec::with_capacity(computed.len());
    let mut main = Tally::new(ctx.model.name());
    let mut extra = Tally::new("extra-comparators");
    for res in computed {
        let (rep, extras) = res?;
        if rep.excluded {
            main.exclude();
        } else {
            main.add(rep.margin, || format!("[{}, {}]", rep.r, rep.s));
        }
        for (margin, excluded) in extras {
            if excluded {
                extra.exclude();
            } else {
                extra.add(margin, || format!("[{}, {}]", rep.r, rep.s));
            }
        }
        reports.push(rep);
    }
    reports.sort_by(|a, b| a.margin.total_cmp(&b.margin).then((a.r, a.s).cmp(&(b.r, b.s))));

    let mut checks = vec![main.finish(), extra.finish()];
    let kappa = options.a_scale;

    match &ctx.model {
        Model::Sogd { .. } | Model::Ogd { .. } => {
            // Every prefix, against the prefix minimizer when it is cheap.
            let mut tally = Tally::new("anytime");
            for t in 1..=horizon {
                let (w, l) = if ctx.oracle.is_closed_form() {
                    let c = ctx.oracle.best(1, t)?;
                    (c.point, c.loss)
                } else {
                    (whole.point.clone(), ctx.best_prefix[t])
                };
                let regret = ctx.learner_loss(1, t) - l;
                match ctx.model.bound(1, t, &w, l, ctx.best_prefix[t], kappa)? {
                    Some(b) => tally.add(b - regret, || format!("[1, {t}]")),
                    None => tally.exclude(),
                }
            }
            checks.push(tally.finish());
        }
        Model::Sacs(b) => {
            checks.push(meta_audit("meta-regret", &learner_losses, &trace.experts, meta_regret_bound));
            checks.push(interval_life_audit("expert-interval", &ctx, |t, l| {
                kappa * b.a(t) + (b.b(t) * l).sqrt()
            })?);
        }
        Model::Cpgc { bounds, markers } => {
            let c = bounds.threshold;
            let best = &ctx.best_prefix;
            checks.push(meta_audit("meta-regret", &learner_losses, &trace.experts, |t, l| {
                let ct = c_tilde(t, best[t], c);
                ct + (2.0 * ct * l).sqrt()
            }));
            checks.push(interval_life_audit("expert-interval", &ctx, |t, l| {
                let ct = c_tilde(t, best[t], c);
                kappa * bounds.a_tilde(ct) + (bounds.b_tilde(ct) * l).sqrt()
            })?);

            // The count only changes at markers and the prefix loss only
            // grows, so marker rounds are the binding ones.
            let mut count = Tally::new("marker-count");
            for (k, &t) in markers.iter().enumerate() {
                let limit = marker_count_bound(c, best[t]);
                count.add(limit as f64 - (k + 1) as f64, || format!("marker {} at round {t}", k + 1));
            }
            checks.push(count.finish());

            let segments: Vec<(usize, usize)> = markers.windows(2).map(|p| (p[0], p[1] - 1)).collect();
            let solved: Vec<Result<Comparator>> =
                segments.par_iter().map(|&(r, s)| ctx.oracle.best(r, s)).collect();
            let mut seg = Tally::new("segment-loss");
            for (&(r, s), res) in segments.iter().zip(solved) {
                let cmp = res?;
                if cmp.converged {
                    seg.add(cmp.loss - c / 4.0, || format!("[{r}, {s}]"));
                } else {
                    seg.exclude();
                }
            }
            checks.push(seg.finish());
        }
    }

    if domain.dim() <= 2 && options.cross_checks > 0 {
        let picks: Vec<(usize, usize)> = intervals.iter().copied().take(options.cross_checks).collect();
        let results: Vec<Result<(f64, usize, usize)>> = picks
            .par_iter()
            .map(|&(r, s)| {
                let main = ctx.oracle.best(r, s)?;
                let grid = grid_comparator(domain, |w| ctx.oracle.loss_unchecked(w, r, s), 30)?;
                Ok((0.0 - (grid.loss - main.loss).abs(), r, s))
            })
            .collect();
        let mut tally = Tally::new("oracle-agreement");
        for res in results {
            let (margin, r, s) = res?;
            tally.add(margin, || format!("[{r}, {s}]"));
        }
        checks.push(tally.finish());
    }

    let range = range_violations(trace);
    let violations = checks.iter().map(|c| c.violations).sum::<usize>() + range.len();
    Ok(AuditReport {
        learner: trace.params.kind,
        horizon,
        a_scale: options.a_scale,
        passed: violations == 0,
        violations,
        checks,
        range_violations: range,
        reports,
    })
}
