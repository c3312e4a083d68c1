use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vector::{dist, norm};

/// A point of the decision space.
pub type DecisionVector = Vec<f64>;

/// Convex feasible set with a cheap Euclidean projection.
///
/// Serialized as a tagged document, e.g.
/// `{"kind": "euclidean-ball", "center": [0, 0], "radius": 1}` or
/// `{"kind": "axis-box", "center": [0, 0], "half_widths": [1, 1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct Domain {
    shape: Shape,
    center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Ball { radius: f64 },
    Box { half_widths: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    EuclideanBall,
    AxisBox,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum DomainRepr {
    EuclideanBall { center: Vec<f64>, radius: f64 },
    AxisBox { center: Vec<f64>, half_widths: Vec<f64> },
}

impl TryFrom<DomainRepr> for Domain {
    type Error = Error;

    fn try_from(repr: DomainRepr) -> Result<Self> {
        match repr {
            DomainRepr::EuclideanBall { center, radius } => Domain::ball(center, radius),
            DomainRepr::AxisBox {
                center,
                half_widths,
            } => Domain::axis_box(center, half_widths),
        }
    }
}

impl From<Domain> for DomainRepr {
    fn from(d: Domain) -> Self {
        match d.shape {
            Shape::Ball { radius } => DomainRepr::EuclideanBall {
                center: d.center,
                radius,
            },
            Shape::Box { half_widths } => DomainRepr::AxisBox {
                center: d.center,
                half_widths,
            },
        }
    }
}

fn check_center(center: &[f64]) -> Result<()> {
    if center.is_empty() {
        return Err(Error::invalid("center", "dimension must be at least 1"));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("center", "coordinates must be finite"));
    }
    Ok(())
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_center(&center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("radius", format!("must be positive, got {radius}")));
        }
        Ok(Domain {
            shape: Shape::Ball { radius },
            center,
        })
    }

    /// Origin-centered ball.
    pub fn unit_ball(dim: usize, radius: f64) -> Result<Self> {
        Domain::ball(vec![0.0; dim], radius)
    }

    pub fn axis_box(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        check_center(&center)?;
        check_dim(center.len(), half_widths.len())?;
        if half_widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("half_widths", "every half-width must be positive"));
        }
        Ok(Domain {
            shape: Shape::Box { half_widths },
            center,
        })
    }

    pub fn kind(&self) -> DomainKind {
        match self.shape {
            Shape::Ball { .. } => DomainKind::EuclideanBall,
            Shape::Box { .. } => DomainKind::AxisBox,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Diameter `D`: twice the radius, or the length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Ball { radius } => 2.0 * radius,
            Shape::Box { half_widths } => 2.0 * norm(half_widths),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, point: &[f64]) -> Result<DecisionVector> {
        check_dim(self.dim(), point.len())?;
        Ok(self.project_unchecked(point))
    }

    pub(crate) fn project_unchecked(&self, point: &[f64]) -> DecisionVector {
        match &self.shape {
            Shape::Ball { radius } => {
                let offset = dist(point, &self.center);
                if offset <= *radius {
                    point.to_vec()
                } else {
                    let scale = radius / offset;
                    point
                        .iter()
                        .zip(&self.center)
                        .map(|(p, c)| c + (p - c) * scale)
                        .collect()
                }
            }
            Shape::Box { half_widths } => point
                .iter()
                .zip(&self.center)
                .zip(half_widths)
                .map(|((p, c), h)| p.clamp(c - h, c + h))
                .collect(),
        }
    }

    /// Membership with an absolute slack `tol`.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.dim() {
            return false;
        }
        match &self.shape {
            Shape::Ball { radius } => dist(point, &self.center) <= radius + tol,
            Shape::Box { half_widths } => point
                .iter()
                .zip(&self.center)
                .zip(half_widths)
                .all(|((p, c), h)| (p - c).abs() <= h + tol),
        }
    }

    /// Uniform sample from the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DecisionVector {
        let d = self.dim();
        match &self.shape {
            Shape::Ball { radius } => {
                let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&dir);
                if n == 0.0 {
                    return self.center.clone();
                }
                let u: f64 = rng.random::<f64>();
                let r = radius * u.powf(1.0 / d as f64);
                for (x, c) in dir.iter_mut().zip(&self.center) {
                    *x = c + *x / n * r;
                }
                dir
            }
            Shape::Box { half_widths } => self
                .center
                .iter()
                .zip(half_widths)
                .map(|(c, h)| c + h * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
        }
    }

    /// Half side lengths of the smallest axis-aligned box around the set.
    pub fn half_extents(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Ball { radius } => vec![*radius; self.dim()],
            Shape::Box { half_widths } => half_widths.clone(),
        }
    }

    /// Whether the origin belongs to the set.
    pub fn contains_origin(&self) -> bool {
        self.contains(&vec![0.0; self.dim()], 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_projection_is_radial() {
        let ball = Domain::unit_ball(2, 1.0).unwrap();
        assert_eq!(ball.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(ball.project(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn box_projection_clamps() {
        let cube = Domain::axis_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(cube.project(&[2.0, -3.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn projection_rejects_wrong_dimension() {
        let ball = Domain::unit_ball(2, 1.0).unwrap();
        assert_eq!(
            ball.project(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
    }

    #[test]
    fn diameters() {
        assert_eq!(Domain::unit_ball(3, 1.5).unwrap().diameter(), 3.0);
        let cube = Domain::axis_box(vec![1.0, 1.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(cube.diameter(), 10.0);
    }

    #[test]
    fn rejects_degenerate_sets() {
        assert!(Domain::ball(vec![0.0], 0.0).is_err());
        assert!(Domain::ball(vec![], 1.0).is_err());
        assert!(Domain::axis_box(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Domain::axis_box(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for domain in [
            Domain::ball(vec![0.5, -1.0, 2.0], 0.7).unwrap(),
            Domain::axis_box(vec![0.0, 1.0], vec![0.2, 3.0]).unwrap(),
        ] {
            for _ in 0..1000 {
                let p = domain.sample(&mut rng);
                assert!(domain.contains(&p, 1e-12));
            }
        }
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let json = r#"{"kind":"axis-box","center":[0,0],"half_widths":[1,2]}"#;
        let d: Domain = serde_json::from_str(json).unwrap();
        assert_eq!(d.kind(), DomainKind::AxisBox);
        let back: Domain = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"kind":"euclidean-ball","center":[0,0],"radius":-1}"#;
        assert!(serde_json::from_str::<Domain>(bad).is_err());
    }
}
