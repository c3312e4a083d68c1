//! Feasible sets, the smooth loss family, and synthetic scenarios.

mod loss;
mod scenario;
mod set;
mod verify;

pub use loss::{LossFunction, ShiftedQuadratic, SmoothLoss};
pub use scenario::{generate_scenario, Scenario};
pub use set::{DecisionVector, Domain, DomainKind};
pub use verify::{
    finite_difference_gradient, gradient_relative_error, self_bounding_margin,
    verify_loss_assumptions, Assumption, AssumptionCheck, AssumptionReport, DEFAULT_SAMPLES,
    GRADIENT_REL_TOL,
};
