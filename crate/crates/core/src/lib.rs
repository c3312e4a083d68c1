//! Adaptive-regret online convex optimization for smooth losses.
//!
//! * [`sogd`]: scale-free online gradient descent, the base expert.
//! * [`intervals`]: geometric covering schedules and their greedy covers.
//! * [`meta`]: AdaNormalHedge over sleeping experts.
//! * [`sacs`] and [`sacs_dyn`]: the composed learners on static and
//!   problem-dependent schedules.
//! * [`harness`]: runs learners on synthetic scenarios and audits every run
//!   against the closed-form regret bounds.

pub mod domain;
pub mod error;
pub mod harness;
pub mod intervals;
pub mod learner;
pub mod meta;
pub mod sacs;
pub mod sacs_dyn;
pub mod sogd;
pub mod vector;

pub use domain::{DecisionVector, Domain, LossFunction, Scenario, ShiftedQuadratic, SmoothLoss};
pub use error::{Error, Result};
pub use learner::{Learner, LearnerKind, RoundInfo};
