//! Running learners on loss sequences and auditing the runs.
//!
//! A run produces a [`RunTrace`] with the learner's per-round losses and
//! every expert's own losses. [`audit_run`] then recomputes hindsight
//! comparators and checks the trace against the regret bounds of its
//! learner: interval bounds over a family of intervals, plus the
//! meta-regret, expert-interval and marker checks.

mod audit;
mod oracle;
mod run;

pub use audit::{
    audit_run, dyadic_intervals, interval_family, interval_regret, sampled_intervals, AuditOptions,
    AuditReport, CheckSummary, IntervalFamily, RangeViolation, RegretReport, EXHAUSTIVE_MAX,
    MARGIN_SLACK,
};
pub use oracle::{grid_comparator, Comparator, ComparatorOracle, PgdOptions};
pub use run::{run, run_learner, ExpertStream, LearnerSpec, RoundRecord, RunParams, RunTrace};
