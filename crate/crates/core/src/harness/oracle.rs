//! Best fixed decision in hindsight over a round interval.

use serde::Serialize;

use crate::domain::{DecisionVector, Domain, LossFunction};
use crate::error::{check_dim, Error, Result};
use crate::vector::{dist, dot, norm_sq};

/// Minimizer of `Σ_{t=r}^s f_t(w)` over the domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparator {
    pub point: DecisionVector,
    pub loss: f64,
    /// `false` when the iterative solver hit its cap.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdOptions {
    /// Stop once the gradient mapping has at most this norm.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PgdOptions {
    fn default() -> Self {
        PgdOptions {
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

/// Prefix sums of `c_t`, `c_t θ_t` and `c_t‖θ_t‖²` for losses
/// `c_t/2·‖w − θ_t‖²`, so any interval sum is
/// `½(C‖w‖² − 2⟨w, S⟩ + Q)`.
#[derive(Debug, Clone)]
struct QuadraticPrefix {
    dim: usize,
    scale: Vec<f64>,
    weighted: Vec<f64>,
    energy: Vec<f64>,
}

impl QuadraticPrefix {
    fn build(losses: &[LossFunction], dim: usize) -> Option<Self> {
        let n = losses.len();
        let mut scale = Vec::with_capacity(n + 1);
        let mut weighted = vec![0.0; (n + 1) * dim];
        let mut energy = Vec::with_capacity(n + 1);
        scale.push(0.0);
        energy.push(0.0);
        for (t, f) in losses.iter().enumerate() {
            let q = f.as_quadratic()?;
            let c = q.scale();
            scale.push(scale[t] + c);
            energy.push(energy[t] + c * norm_sq(q.target()));
            for k in 0..dim {
                weighted[(t + 1) * dim + k] = weighted[t * dim + k] + c * q.target()[k];
            }
        }
        Some(QuadraticPrefix {
            dim,
            scale,
            weighted,
            energy,
        })
    }

    /// `(C, S, Q)` over rounds `r..=s` (1-based).
    fn window(&self, r: usize, s: usize) -> (f64, Vec<f64>, f64) {
        let d = self.dim;
        let c = self.scale[s] - self.scale[r - 1];
        let sum = (0..d)
            .map(|k| self.weighted[s * d + k] - self.weighted[(r - 1) * d + k])
            .collect();
        let q = self.energy[s] - self.energy[r - 1];
        (c, sum, q)
    }

    fn loss(&self, w: &[f64], r: usize, s: usize) -> f64 {
        let (c, sum, q) = self.window(r, s);
        (0.5 * (c * norm_sq(w) - 2.0 * dot(w, &sum) + q)).max(0.0)
    }
}

/// Hindsight comparator over intervals of one loss sequence.
///
/// Sequences made only of shifted quadratics are solved in closed form
/// (project the weighted mean of the targets); anything else goes through
/// projected gradient descent.
#[derive(Debug, Clone)]
pub struct ComparatorOracle<'a> {
    domain: &'a Domain,
    losses: &'a [LossFunction],
    quadratic: Option<QuadraticPrefix>,
    pgd: PgdOptions,
}

impl<'a> ComparatorOracle<'a> {
    pub fn new(domain: &'a Domain, losses: &'a [LossFunction]) -> Result<Self> {
        for f in losses {
            check_dim(domain.dim(), f.dim())?;
        }
        Ok(ComparatorOracle {
            domain,
            losses,
            quadratic: QuadraticPrefix::build(losses, domain.dim()),
            pgd: PgdOptions::default(),
        })
    }

    /// Force the iterative solver even for quadratic sequences.
    pub fn iterative(domain: &'a Domain, losses: &'a [LossFunction], pgd: PgdOptions) -> Result<Self> {
        let mut oracle = Self::new(domain, losses)?;
        oracle.quadratic = None;
        oracle.pgd = pgd;
        Ok(oracle)
    }

    pub fn horizon(&self) -> usize {
        self.losses.len()
    }

    pub fn domain(&self) -> &Domain {
        self.domain
    }

    pub fn is_closed_form(&self) -> bool {
        self.quadratic.is_some()
    }

    fn check_range(&self, r: usize, s: usize) -> Result<()> {
        if r < 1 || r > s || s > self.losses.len() {
            return Err(Error::contract(format!(
                "interval [{r}, {s}] outside rounds 1..={}",
                self.losses.len()
            )));
        }
        Ok(())
    }

    /// `Σ_{t=r}^s f_t(w)`.
    pub fn loss(&self, w: &[f64], r: usize, s: usize) -> Result<f64> {
        self.check_range(r, s)?;
        check_dim(self.domain.dim(), w.len())?;
        Ok(self.loss_unchecked(w, r, s))
    }

    pub(crate) fn loss_unchecked(&self, w: &[f64], r: usize, s: usize) -> f64 {
        match &self.quadratic {
            Some(q) => q.loss(w, r, s),
            None => self.losses[r - 1..s].iter().map(|f| f.value_unchecked(w)).sum(),
        }
    }

    pub fn best(&self, r: usize, s: usize) -> Result<Comparator> {
        self.check_range(r, s)?;
        Ok(match &self.quadratic {
            Some(q) => {
                let (c, sum, _) = q.window(r, s);
                let point = if c > 0.0 {
                    let mean: Vec<f64> = sum.iter().map(|x| x / c).collect();
                    self.domain.project_unchecked(&mean)
                } else {
                    self.domain.center().to_vec()
                };
                let loss = q.loss(&point, r, s);
                Comparator {
                    point,
                    loss,
                    converged: true,
                }
            }
            None => self.projected_gradient(r, s),
        })
    }

    fn projected_gradient(&self, r: usize, s: usize) -> Comparator {
        let window = &self.losses[r - 1..s];
        let h: f64 = window.iter().map(|f| f.smoothness()).sum();
        let step = if h > 0.0 { 1.0 / h } else { 1.0 };
        let dim = self.domain.dim();
        let mut w = self.domain.center().to_vec();
        let mut converged = false;
        for _ in 0..self.pgd.max_iterations {
            let mut grad = vec![0.0; dim];
            for f in window {
                let (_, g) = f.eval_unchecked(&w);
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            let moved: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let next = self.domain.project_unchecked(&moved);
            let mapping = dist(&w, &next) / step;
            w = next;
            if mapping <= self.pgd.tolerance {
                converged = true;
                break;
            }
        }
        let loss = window.iter().map(|f| f.value_unchecked(&w)).sum();
        Comparator {
            point: w,
            loss,
            converged,
        }
    }
}

/// Minimizer by successive grid refinement, for dimension 1 or 2.
///
/// Each level evaluates a `(2·half + 1)`-point grid per axis around the
/// incumbent, projected onto the domain, then shrinks the spacing by four.
/// Uses nothing but function values, so it is independent of both the
/// closed form and the gradient solver.
pub fn grid_comparator(
    domain: &Domain,
    objective: impl Fn(&[f64]) -> f64,
    levels: usize,
) -> Result<Comparator> {
    let dim = domain.dim();
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid("domain", format!("grid search needs dimension 1 or 2, got {dim}")));
    }
    const HALF: i64 = 10;
    let mut spacing: Vec<f64> = domain.half_extents().iter().map(|h| h / HALF as f64).collect();
    let mut best = domain.center().to_vec();
    let mut best_value = objective(&best);
    for _ in 0..levels {
        let anchor = best.clone();
        let ys: Vec<i64> = if dim == 2 { (-HALF..=HALF).collect() } else { vec![0] };
        for i in -HALF..=HALF {
            for &j in &ys {
                let mut p = vec![anchor[0] + i as f64 * spacing[0]];
                if dim == 2 {
                    p.push(anchor[1] + j as f64 * spacing[1]);
                }
                let p = domain.project_unchecked(&p);
                let v = objective(&p);
                if v < best_value {
                    best_value = v;
                    best = p;
                }
            }
        }
        for s in &mut spacing {
            *s /= 4.0;
        }
    }
    Ok(Comparator {
        point: best,
        loss: best_value,
        converged: true,
    })
}
