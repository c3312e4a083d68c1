use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::domain::{Domain, LossFunction};
use crate::error::{check_dim, Error, Result};
use crate::vector::{dist, norm, norm_sq, sub};

/// Default number of sampled points per check.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Relative error allowed between the analytic gradient and central differences.
pub const GRADIENT_REL_TOL: f64 = 1e-6;

// Relative slack for the inequality checks; exact equality in the family
// (e.g. smoothness of a quadratic) must not fail on rounding.
const INEQ_REL_TOL: f64 = 1e-9;

// Gradients smaller than this are compared in absolute terms.
const GRADIENT_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assumption {
    /// `f ≥ 0` on a neighborhood of the domain (ambient nonnegativity).
    Nonnegative,
    /// `0 ≤ f ≤ 1` on the domain.
    BoundedOnDomain,
    /// `‖∇f(w) − ∇f(w′)‖ ≤ H‖w − w′‖` on sampled pairs.
    Smoothness,
    /// `‖∇f(w)‖² ≤ 4Hf(w)` on sampled points.
    SelfBounding,
    /// Analytic gradient versus central finite differences.
    GradientConsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    /// Smallest slack observed; negative means violated. Relative for the
    /// inequality checks, `1e-6 − max relative error` for the gradient check.
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, assumption: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }
}

struct Worst {
    margin: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            point: Vec::new(),
        }
    }

    fn offer(&mut self, margin: f64, point: &[f64]) {
        // NaN counts as a violation.
        if margin.is_nan() || margin < self.margin {
            self.margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
            self.point = point.to_vec();
        }
    }

    fn into_check(self, assumption: Assumption) -> AssumptionCheck {
        AssumptionCheck {
            assumption,
            passed: self.margin >= 0.0,
            worst_margin: self.margin,
            worst_point: self.point,
        }
    }
}

/// Slack of `lhs ≤ rhs`, relative to the magnitude of the two sides.
fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (rhs - lhs) / scale + INEQ_REL_TOL
}

/// Central-difference gradient with step `1e-5·(1 + ‖w‖)`.
pub fn finite_difference_gradient(f: &LossFunction, w: &[f64]) -> Vec<f64> {
    let h = 1e-5 * (1.0 + norm(w));
    let mut probe = w.to_vec();
    (0..w.len())
        .map(|i| {
            probe[i] = w[i] + h;
            let up = f.value_unchecked(&probe);
            probe[i] = w[i] - h;
            let down = f.value_unchecked(&probe);
            probe[i] = w[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error between the analytic and finite-difference gradients at `w`.
pub fn gradient_relative_error(f: &LossFunction, w: &[f64]) -> Result<f64> {
    check_dim(f.dim(), w.len())?;
    let g = f.gradient(w)?;
    let fd = finite_difference_gradient(f, w);
    Ok(norm(&sub(&g, &fd)) / norm(&g).max(GRADIENT_FLOOR))
}

/// Margin `4H·f(w) − ‖∇f(w)‖²` at a single point.
pub fn self_bounding_margin(f: &LossFunction, w: &[f64]) -> Result<f64> {
    let (v, g) = f.eval(w)?;
    Ok(4.0 * f.smoothness() * v - norm_sq(&g))
}

/// Sampling-based check of the analytic assumptions on `f` over `domain`.
///
/// Nonnegativity outside the domain is only examined on a Gaussian
/// neighborhood of scale `D` around sampled domain points. Failures are
/// reported in the returned report, never as an error.
pub fn verify_loss_assumptions(
    f: &LossFunction,
    domain: &Domain,
    samples: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    check_dim(domain.dim(), f.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = f.smoothness();
    let diameter = domain.diameter();

    let mut nonneg = Worst::new();
    let mut bounded = Worst::new();
    let mut smooth = Worst::new();
    let mut self_bound = Worst::new();
    let mut grad = Worst::new();

    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..samples {
        let w = domain.sample(&mut rng);
        let (v, g) = f.eval_unchecked(&w);

        bounded.offer(v.min(1.0 - v), &w);
        self_bound.offer(rel_slack(norm_sq(&g), 4.0 * h * v), &w);

        let fd = finite_difference_gradient(f, &w);
        let rel = norm(&sub(&g, &fd)) / norm(&g).max(GRADIENT_FLOOR);
        grad.offer(GRADIENT_REL_TOL - rel, &w);

        if let Some((pw, pg)) = &prev {
            let lhs = norm(&sub(&g, pg));
            let rhs = h * dist(&w, pw);
            smooth.offer(rel_slack(lhs, rhs), &w);
        }

        let outside: Vec<f64> = w
            .iter()
            .map(|x| x + diameter * rng.sample::<f64, _>(StandardNormal))
            .collect();
        nonneg.offer(f.value_unchecked(&outside).min(v), &outside);

        prev = Some((w, g));
    }
    if samples == 1 {
        smooth.offer(0.0, domain.center());
    }

    Ok(AssumptionReport {
        samples,
        checks: vec![
            nonneg.into_check(Assumption::Nonnegative),
            bounded.into_check(Assumption::BoundedOnDomain),
            smooth.into_check(Assumption::Smoothness),
            self_bound.into_check(Assumption::SelfBounding),
            grad.into_check(Assumption::GradientConsistency),
        ],
    })
}
