use std::fmt;
use std::sync::Arc;

use crate::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::vector::{dist_sq, sub};

/// A convex, nonnegative, `H`-smooth loss supplied by the caller.
///
/// Implementations must be convex and nonnegative on the whole ambient
/// space; [`verify_loss_assumptions`](crate::domain::verify_loss_assumptions)
/// can only spot-check these properties by sampling.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64]) -> Vec<f64>;
    /// Declared Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;
}

/// `f(w) = scale/2 · ‖w − target‖²`, smooth with `H = scale`.
///
/// With `scale = 1/D²` and a target inside the domain the value stays in
/// `[0, 1/2]` on the domain and is nonnegative everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedQuadratic {
    target: Vec<f64>,
    scale: f64,
}

impl ShiftedQuadratic {
    pub fn new(target: Vec<f64>, scale: f64) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::invalid("target", "dimension must be at least 1"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(ShiftedQuadratic { target, scale })
    }

    /// The default family member for `domain`: `‖w − target‖² / (2D²)`.
    pub fn for_domain(target: Vec<f64>, domain: &Domain) -> Result<Self> {
        check_dim(domain.dim(), target.len())?;
        let d = domain.diameter();
        ShiftedQuadratic::new(target, 1.0 / (d * d))
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl SmoothLoss for ShiftedQuadratic {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * self.scale * dist_sq(w, &self.target)
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        sub(w, &self.target)
            .into_iter()
            .map(|x| self.scale * x)
            .collect()
    }

    fn smoothness(&self) -> f64 {
        self.scale
    }
}

/// One round's loss.
#[derive(Clone)]
pub enum LossFunction {
    ShiftedQuadratic(ShiftedQuadratic),
    Custom(Arc<dyn SmoothLoss>),
}

impl fmt::Debug for LossFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossFunction::ShiftedQuadratic(q) => f.debug_tuple("ShiftedQuadratic").field(q).finish(),
            LossFunction::Custom(c) => f
                .debug_struct("Custom")
                .field("dim", &c.dim())
                .field("smoothness", &c.smoothness())
                .finish(),
        }
    }
}

impl From<ShiftedQuadratic> for LossFunction {
    fn from(q: ShiftedQuadratic) -> Self {
        LossFunction::ShiftedQuadratic(q)
    }
}

impl LossFunction {
    pub fn custom(loss: impl SmoothLoss + 'static) -> Self {
        LossFunction::Custom(Arc::new(loss))
    }

    fn inner(&self) -> &dyn SmoothLoss {
        match self {
            LossFunction::ShiftedQuadratic(q) => q,
            LossFunction::Custom(c) => c.as_ref(),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner().dim()
    }

    pub fn smoothness(&self) -> f64 {
        self.inner().smoothness()
    }

    /// Value and gradient at `w`.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), w.len())?;
        let f = self.inner();
        Ok((f.value(w), f.gradient(w)))
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        Ok(self.inner().value(w))
    }

    pub fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        Ok(self.inner().gradient(w))
    }

    pub(crate) fn value_unchecked(&self, w: &[f64]) -> f64 {
        self.inner().value(w)
    }

    pub(crate) fn eval_unchecked(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let f = self.inner();
        (f.value(w), f.gradient(w))
    }

    pub fn as_quadratic(&self) -> Option<&ShiftedQuadratic> {
        match self {
            LossFunction::ShiftedQuadratic(q) => Some(q),
            LossFunction::Custom(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(target: Vec<f64>) -> LossFunction {
        let domain = Domain::unit_ball(target.len(), 1.0).unwrap();
        ShiftedQuadratic::for_domain(target, &domain).unwrap().into()
    }

    #[test]
    fn minimum_at_target() {
        let f = quad(vec![0.2, -0.4]);
        let (v, g) = f.eval(&[0.2, -0.4]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_values() {
        // D = 2, so f(w) = ‖w − θ‖² / 8 and ∇f = (w − θ)/4.
        let (v, g) = quad(vec![0.0, 0.0]).eval(&[1.0, 0.0]).unwrap();
        assert_eq!(v, 0.125);
        assert_eq!(g, vec![0.25, 0.0]);

        let (v, g) = quad(vec![1.0, 0.0]).eval(&[-1.0, 0.0]).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(g, vec![-0.5, 0.0]);
    }

    #[test]
    fn smoothness_is_inverse_diameter_squared() {
        assert_eq!(quad(vec![0.0, 0.0]).smoothness(), 0.25);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        assert!(matches!(
            quad(vec![0.0, 0.0]).eval(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }
}
